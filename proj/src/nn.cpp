#include "rcb/nn.hpp"

#include <stdexcept>

namespace rcb::diff {

GaussianParams clamp_sigma(GaussianParams g) {
    for (int i = 0; i < g.log_sigma.size(); ++i)
        g.log_sigma[i] = std::min(kLogSigmaMax, std::max(kLogSigmaMin, g.log_sigma[i]));
    return g;
}

double kl_diag_gaussians(const GaussianParams& p, const GaussianParams& q) {
    if (p.dim() != q.dim()) throw std::invalid_argument("kl_diag_gaussians: dim mismatch");
    double kl = 0.0;
    for (int i = 0; i < p.dim(); ++i) {
        const double sp = p.sigma(i);
        const double sq = q.sigma(i);
        const double dm = p.mu[i] - q.mu[i];
        kl += q.log_sigma[i] - p.log_sigma[i] + (sp * sp + dm * dm) / (2.0 * sq * sq) - 0.5;
    }
    return kl;
}

Value kl_diag(const GaussianNodes& p, const GaussianNodes& q) {
    if (p.mu->val.size() != q.mu->val.size())
        throw std::invalid_argument("kl_diag: dim mismatch");
    Value var_q = exp_v(scale(q.log_sigma, 2.0));
    Value var_p = exp_v(scale(p.log_sigma, 2.0));
    Value dm = sub(p.mu, q.mu);
    Value ratio = mul(add(var_p, square(dm)), exp_v(scale(q.log_sigma, -2.0)));
    Value terms = add(sub(q.log_sigma, p.log_sigma), scale(ratio, 0.5));
    return add_const(sum(terms), -0.5 * p.mu->val.size());
}

Value kl_from_fixed(const GaussianParams& p, const GaussianNodes& q) {
    GaussianNodes fixed{constant(p.mu), constant(p.log_sigma)};
    return kl_diag(fixed, q);
}

Tensor reparam_sample(const GaussianParams& g, const Tensor& noise) {
    if (!g.mu.same_shape(noise)) throw std::invalid_argument("reparam_sample: shape mismatch");
    Tensor out = g.mu;
    for (int i = 0; i < out.size(); ++i) out[i] += g.sigma(i) * noise[i];
    return out;
}

Value reparam_sample(const GaussianNodes& g, const Tensor& noise) {
    return add(g.mu, mul(exp_v(g.log_sigma), constant(noise)));
}

double gaussian_nll(const GaussianParams& g, const Tensor& x) {
    double nll = 0.0;
    for (int i = 0; i < g.dim(); ++i) {
        const double s = g.sigma(i);
        const double z = (x[i] - g.mu[i]) / s;
        nll += 0.5 * kLogTwoPi + g.log_sigma[i] + 0.5 * z * z;
    }
    return nll;
}

Value gaussian_nll(const GaussianNodes& g, const Tensor& x) {
    Value diff = sub(constant(x), g.mu);
    Value z2 = mul(square(diff), exp_v(scale(g.log_sigma, -2.0)));
    Value terms = add(g.log_sigma, scale(z2, 0.5));
    return add_const(sum(terms), 0.5 * kLogTwoPi * x.size());
}

Value unit_gaussian_nll(const Value& mu, const Tensor& x) {
    Value diff = sub(constant(x), mu);
    return add_const(scale(sum(square(diff)), 0.5), 0.5 * kLogTwoPi * x.size());
}

Value gaussian_entropy(const GaussianNodes& g) {
    const double c = 0.5 * (kLogTwoPi + 1.0) * g.mu->val.size();
    return add_const(sum(g.log_sigma), c);
}

GaussianParams values_of(const GaussianNodes& g) { return {g.mu->val, g.log_sigma->val}; }

Linear Linear::init(ParamSet& ps, const std::string& prefix, int in, int out, Rng& rng) {
    Linear l{prefix + ".w", prefix + ".b"};
    const double stddev = 1.0 / std::sqrt(static_cast<double>(std::max(1, in)));
    ps.create_normal(l.weight, {out, in}, rng, stddev);
    ps.create(l.bias, {out});
    return l;
}

Value Linear::operator()(Rec& rec, const Value& x) const {
    return add(matvec(rec.p(weight), x), rec.p(bias));
}

Mlp Mlp::init(ParamSet& ps, const std::string& prefix, const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp needs at least in/out dims");
    Mlp m;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        m.layers.push_back(
            Linear::init(ps, prefix + ".l" + std::to_string(i), dims[i], dims[i + 1], rng));
    }
    return m;
}

Value Mlp::operator()(Rec& rec, const Value& x) const {
    Value h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i](rec, h);
        if (i + 1 < layers.size()) h = tanh_v(h);
    }
    return h;
}

GruCell GruCell::init(ParamSet& ps, const std::string& prefix, int in, int hidden, Rng& rng) {
    GruCell c;
    c.input_dim = in;
    c.hidden_dim = hidden;
    c.wz = prefix + ".wz";
    c.wr = prefix + ".wr";
    c.wn = prefix + ".wn";
    c.bz = prefix + ".bz";
    c.br = prefix + ".br";
    c.bn = prefix + ".bn";
    const double stddev = 1.0 / std::sqrt(static_cast<double>(in + hidden));
    ps.create_normal(c.wz, {hidden, in + hidden}, rng, stddev);
    ps.create_normal(c.wr, {hidden, in + hidden}, rng, stddev);
    ps.create_normal(c.wn, {hidden, in + hidden}, rng, stddev);
    ps.create(c.bz, {hidden});
    ps.create(c.br, {hidden});
    ps.create(c.bn, {hidden});
    return c;
}

Value GruCell::step(Rec& rec, const Value& x, const Value& h) const {
    Value xh = concat({x, h});
    Value z = sigmoid(add(matvec(rec.p(wz), xh), rec.p(bz)));
    Value r = sigmoid(add(matvec(rec.p(wr), xh), rec.p(br)));
    Value xrh = concat({x, mul(r, h)});
    Value n = tanh_v(add(matvec(rec.p(wn), xrh), rec.p(bn)));
    // h' = (1-z)*h + z*n
    Value one_minus_z = add_const(neg(z), 1.0);
    return add(mul(one_minus_z, h), mul(z, n));
}

GaussianHead GaussianHead::init(ParamSet& ps, const std::string& prefix, int in, int out,
                                Rng& rng, double log_sigma_bias) {
    GaussianHead head;
    head.mu = Linear::init(ps, prefix + ".mu", in, out, rng);
    head.log_sigma = Linear::init(ps, prefix + ".ls", in, out, rng);
    Tensor& b = ps.at(head.log_sigma.bias);
    for (int i = 0; i < b.size(); ++i) b[i] = log_sigma_bias;
    return head;
}

GaussianNodes GaussianHead::operator()(Rec& rec, const Value& x) const {
    Value m = mu(rec, x);
    Value ls = clamp(log_sigma(rec, x), kLogSigmaMin, kLogSigmaMax);
    return {m, ls};
}

}  // namespace rcb::diff
