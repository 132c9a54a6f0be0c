#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rcb/graph.hpp"
#include "rcb/rng.hpp"
#include "rcb/tensor.hpp"

namespace rcb::diff {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 0.0;  // 0 disables clipping
};

using GradMap = std::map<std::string, Tensor>;

// Named parameter tensors with per-parameter first/second moment state.
// Mutation is single-owner; read-only forward evaluation is safe to share.
class ParamSet {
public:
    Tensor& create(const std::string& name, std::vector<int> shape);
    Tensor& create_normal(const std::string& name, std::vector<int> shape, Rng& rng,
                          double stddev);

    bool contains(const std::string& name) const { return entries_.count(name) > 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    std::vector<std::string> names() const;
    std::size_t size() const { return entries_.size(); }

    // One adaptive (Adam) step. Names absent from `grads` are left untouched;
    // zero gradients leave parameters unchanged on a fresh state.
    void adam_step(const GradMap& grads, const AdamConfig& cfg);
    std::int64_t step_count() const { return step_; }

    // Checkpoint format: magic, entry count, then per entry a name, shape
    // header and raw little-endian float32 values. Optimizer state is not
    // persisted. save(load(f)) reproduces f byte-exactly.
    void save(const std::filesystem::path& file) const;
    void load(const std::filesystem::path& file);  // shapes must match

    std::uint64_t value_hash() const;  // hash of the serialized form

private:
    struct Entry {
        Tensor value;
        Tensor m;
        Tensor v;
    };
    std::map<std::string, Entry> entries_;
    std::int64_t step_ = 0;
};

// Records gradient leaves for one graph build. Each parameter name maps to a
// single leaf Value so that reuse across time steps accumulates gradients.
class Rec {
public:
    explicit Rec(const ParamSet& params) : params_(&params) {}

    Value p(const std::string& name);
    GradMap grads() const;  // call after backward()

private:
    const ParamSet* params_;
    std::map<std::string, Value> leaves_;
};

// Central-difference gradient verification for a scalar loss built over the
// given ParamSet. Returns the max relative error across all coordinates.
double finite_diff_check(ParamSet& params, const std::function<Value(Rec&)>& loss_fn,
                         double step);

}  // namespace rcb::diff
