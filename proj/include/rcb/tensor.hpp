#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace rcb::diff {

// Dense row-major tensor of doubles, rank 0..2. Training runs at 64-bit
// throughout; checkpoints narrow to 32-bit on disk (see ParamSet).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);

    static Tensor scalar(double v);
    static Tensor vector(std::vector<double> v);
    static Tensor zeros_like(const Tensor& other);
    static Tensor filled(std::vector<int> shape, double v);

    const std::vector<int>& shape() const { return shape_; }
    int size() const { return static_cast<int>(data_.size()); }
    int rows() const;
    int cols() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool is_scalar() const { return data_.size() == 1; }

    double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
    double& at(int r, int c);
    double at(int r, int c) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double item() const;  // requires scalar

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace rcb::diff
