#include "rcb/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rcb::diff {

namespace {

constexpr char kMagic[8] = {'R', 'C', 'B', 'P', '0', '0', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw std::runtime_error("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

void put_f32(std::string& out, float f) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

float get_f32(const std::string& in, std::size_t& pos) {
    std::uint32_t bits = get_u32(in, pos);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

Tensor& ParamSet::create(const std::string& name, std::vector<int> shape) {
    if (entries_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    Entry e;
    e.value = Tensor(shape);
    e.m = Tensor(shape);
    e.v = Tensor(std::move(shape));
    return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParamSet::create_normal(const std::string& name, std::vector<int> shape, Rng& rng,
                                double stddev) {
    Tensor& t = create(name, std::move(shape));
    for (int i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
    return t;
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second.value;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second.value;
}

std::vector<std::string> ParamSet::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

void ParamSet::adam_step(const GradMap& grads, const AdamConfig& cfg) {
    double clip_scale = 1.0;
    if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, g] : grads)
            for (int i = 0; i < g.size(); ++i) sq += g[i] * g[i];
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) clip_scale = cfg.clip_norm / norm;
    }

    ++step_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    for (const auto& [name, g] : grads) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw std::out_of_range("gradient for unknown parameter " + name);
        Entry& e = it->second;
        if (!g.same_shape(e.value)) throw std::invalid_argument("gradient shape mismatch: " + name);
        for (int i = 0; i < g.size(); ++i) {
            const double gi = g[i] * clip_scale;
            e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * gi;
            e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = e.m[i] / bc1;
            const double vhat = e.v[i] / bc2;
            e.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

namespace {
std::string serialize(const std::map<std::string, Tensor*>& values) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(values.size()));
    for (const auto& [name, tensor] : values) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.append(name);
        const auto& shape = tensor->shape();
        put_u32(out, static_cast<std::uint32_t>(shape.size()));
        for (int d : shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (int i = 0; i < tensor->size(); ++i)
            put_f32(out, static_cast<float>((*tensor)[i]));
    }
    return out;
}
}  // namespace

void ParamSet::save(const std::filesystem::path& file) const {
    std::map<std::string, Tensor*> values;
    for (auto& [name, e] : entries_) values.emplace(name, const_cast<Tensor*>(&e.value));
    const std::string blob = serialize(values);
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + file.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw std::runtime_error("short write on checkpoint: " + file.string());
}

void ParamSet::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string blob = ss.str();

    std::size_t pos = 0;
    if (blob.size() < sizeof(kMagic) || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("bad checkpoint magic: " + file.string());
    pos = sizeof(kMagic);
    const std::uint32_t count = get_u32(blob, pos);
    if (count != entries_.size())
        throw std::runtime_error("checkpoint entry count mismatch: " + file.string());
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = get_u32(blob, pos);
        if (pos + name_len > blob.size()) throw std::runtime_error("checkpoint truncated");
        const std::string name = blob.substr(pos, name_len);
        pos += name_len;
        const std::uint32_t ndim = get_u32(blob, pos);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(get_u32(blob, pos));
        auto it = entries_.find(name);
        if (it == entries_.end())
            throw std::runtime_error("checkpoint has unknown parameter " + name);
        Tensor& t = it->second.value;
        if (t.shape() != shape)
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        for (int i = 0; i < t.size(); ++i) t[i] = static_cast<double>(get_f32(blob, pos));
    }
    if (pos != blob.size()) throw std::runtime_error("trailing bytes in checkpoint");
}

std::uint64_t ParamSet::value_hash() const {
    std::map<std::string, Tensor*> values;
    for (auto& [name, e] : entries_) values.emplace(name, const_cast<Tensor*>(&e.value));
    return fnv1a64(serialize(values));
}

Value Rec::p(const std::string& name) {
    auto it = leaves_.find(name);
    if (it != leaves_.end()) return it->second;
    Value v = leaf(params_->at(name));
    leaves_.emplace(name, v);
    return v;
}

GradMap Rec::grads() const {
    GradMap out;
    for (const auto& [name, v] : leaves_) {
        out.emplace(name, v->grad_ready ? v->grad : Tensor::zeros_like(v->val));
    }
    return out;
}

double finite_diff_check(ParamSet& params, const std::function<Value(Rec&)>& loss_fn,
                         double step) {
    GradMap analytic;
    {
        Rec rec(params);
        Value loss = loss_fn(rec);
        backward(loss);
        analytic = rec.grads();
    }
    auto eval = [&]() {
        Rec rec(params);
        return loss_fn(rec)->val.item();
    };
    double max_rel = 0.0;
    for (auto& [name, grad] : analytic) {
        Tensor& value = params.at(name);
        for (int i = 0; i < value.size(); ++i) {
            const double keep = value[i];
            value[i] = keep + step;
            const double hi = eval();
            value[i] = keep - step;
            const double lo = eval();
            value[i] = keep;
            const double numeric = (hi - lo) / (2.0 * step);
            const double denom = std::max({1e-6, std::fabs(numeric), std::fabs(grad[i])});
            max_rel = std::max(max_rel, std::fabs(numeric - grad[i]) / denom);
        }
    }
    return max_rel;
}

}  // namespace rcb::diff
