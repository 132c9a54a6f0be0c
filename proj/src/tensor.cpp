#include "rcb/tensor.hpp"

#include <stdexcept>

namespace rcb::diff {

namespace {
std::size_t count_of(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    if (shape_.size() > 2) throw std::invalid_argument("tensor rank > 2 unsupported");
    data_.assign(count_of(shape_), 0.0);
}

Tensor Tensor::scalar(double v) {
    Tensor t{std::vector<int>{}};
    t.data_ = {v};
    return t;
}

Tensor Tensor::vector(std::vector<double> v) {
    Tensor t;
    t.shape_ = {static_cast<int>(v.size())};
    t.data_ = std::move(v);
    return t;
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

Tensor Tensor::filled(std::vector<int> shape, double v) {
    Tensor t{std::move(shape)};
    for (double& x : t.data_) x = v;
    return t;
}

int Tensor::rows() const {
    if (shape_.size() != 2) throw std::logic_error("rows() on non-matrix");
    return shape_[0];
}

int Tensor::cols() const {
    if (shape_.size() != 2) throw std::logic_error("cols() on non-matrix");
    return shape_[1];
}

double& Tensor::at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }

double Tensor::at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols() + c];
}

double Tensor::item() const {
    if (data_.size() != 1) throw std::logic_error("item() on non-scalar tensor");
    return data_[0];
}

}  // namespace rcb::diff
