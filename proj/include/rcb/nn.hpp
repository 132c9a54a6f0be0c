#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rcb/params.hpp"

namespace rcb::diff {

// log sigma is hard-clamped to keep KL and NLL finite.
inline constexpr double kLogSigmaMin = -9.210340371976182;  // log(1e-4)
inline constexpr double kLogSigmaMax = 4.605170185988092;   // log(1e2)
inline constexpr double kLogTwoPi = 1.8378770664093453;

// Diagonal Gaussian given by mean and log standard deviation.
struct GaussianParams {
    Tensor mu;
    Tensor log_sigma;

    int dim() const { return mu.size(); }
    double sigma(int i) const { return std::exp(log_sigma[i]); }
};

// Graph-side counterpart; log_sigma is expected to be pre-clamped.
struct GaussianNodes {
    Value mu;
    Value log_sigma;
};

GaussianParams clamp_sigma(GaussianParams g);

// KL(p || q) for diagonal Gaussians, closed form. Eager and graph versions.
double kl_diag_gaussians(const GaussianParams& p, const GaussianParams& q);
Value kl_diag(const GaussianNodes& p, const GaussianNodes& q);
// KL against fixed reference p (gradient flows into q only).
Value kl_from_fixed(const GaussianParams& p, const GaussianNodes& q);

// mu + sigma * noise
Tensor reparam_sample(const GaussianParams& g, const Tensor& noise);
Value reparam_sample(const GaussianNodes& g, const Tensor& noise);

// Negative log density, constants included.
double gaussian_nll(const GaussianParams& g, const Tensor& x);
Value gaussian_nll(const GaussianNodes& g, const Tensor& x);
// Unit-variance case used by the observation model.
Value unit_gaussian_nll(const Value& mu, const Tensor& x);

// Differential entropy of a diagonal Gaussian.
Value gaussian_entropy(const GaussianNodes& g);

GaussianParams values_of(const GaussianNodes& g);

struct Linear {
    std::string weight;
    std::string bias;
    static Linear init(ParamSet& ps, const std::string& prefix, int in, int out, Rng& rng);
    Value operator()(Rec& rec, const Value& x) const;
};

// Feed-forward stack with tanh activations between layers (none after last).
struct Mlp {
    std::vector<Linear> layers;
    static Mlp init(ParamSet& ps, const std::string& prefix, const std::vector<int>& dims,
                    Rng& rng);
    Value operator()(Rec& rec, const Value& x) const;
};

// Gated recurrent cell; h' = (1-z)*h + z*n.
struct GruCell {
    std::string wz, wr, wn, bz, br, bn;
    int input_dim = 0;
    int hidden_dim = 0;
    static GruCell init(ParamSet& ps, const std::string& prefix, int in, int hidden, Rng& rng);
    Value step(Rec& rec, const Value& x, const Value& h) const;
};

// Linear mu / log-sigma pair producing a clamped Gaussian.
struct GaussianHead {
    Linear mu;
    Linear log_sigma;
    static GaussianHead init(ParamSet& ps, const std::string& prefix, int in, int out, Rng& rng,
                             double log_sigma_bias = 0.0);
    GaussianNodes operator()(Rec& rec, const Value& x) const;
};

}  // namespace rcb::diff
