#include "partforge/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace partforge {

void TrainingPlan::validate() const {
    if (steps < 0) fail(ErrorKind::config, "training steps must be >= 0");
    if (batch_size < 1) fail(ErrorKind::config, "batch size must be >= 1");
    if (!(learning_rate >= 0.0)) fail(ErrorKind::config, "learning rate must be >= 0");
    if (!(monolithic_fraction >= 0.0 && monolithic_fraction <= 1.0))
        fail(ErrorKind::config, "monolithic_fraction must lie in [0,1]");
    if (bucketing != "by_part_count")
        fail(ErrorKind::config, "unsupported bucketing policy '" + bucketing + "'");
}

void SamplerConfig::validate() const {
    if (num_steps < 1) fail(ErrorKind::config, "sampler num_steps must be >= 1");
}

AdamState AdamState::init(const Denoiser& model) {
    AdamState s;
    for (const NamedParam& p : model.params()) {
        s.m.push_back(Tensor::zeros(p.value.shape()));
        s.v.push_back(Tensor::zeros(p.value.shape()));
    }
    return s;
}

Var flow_loss(Graph& g, const Denoiser& model, const Denoiser::Bound& b, const Tensor& z0,
              const Tensor& eps, const std::vector<int>& slots, NoiseLevel t, const Tensor& cond) {
    Tensor zt = interpolate(z0, eps, t);
    Tensor target = z0;
    for (std::int64_t i = 0; i < target.numel(); ++i) target.at(i) = eps.at(i) - z0.at(i);
    Var v = model.forward(g, b, g.constant(std::move(zt)), slots, t.t, g.constant(cond));
    Var diff = sub(v, g.constant(std::move(target)));
    return mean_all(mul(diff, diff));
}

Var flow_loss(Graph& g, const Denoiser& model, const Denoiser::Bound& b, const Tensor& z0,
              const Tensor& eps, const std::vector<int>& slots,
              const std::vector<NoiseLevel>& per_part_t, const Tensor& cond) {
    if (per_part_t.empty()) fail(ErrorKind::contract, "flow_loss: no noise level given");
    for (const NoiseLevel& t : per_part_t)
        if (t.t != per_part_t[0].t)
            fail(ErrorKind::contract, "flow_loss: the noise level is shared across all parts");
    return flow_loss(g, model, b, z0, eps, slots, per_part_t[0], cond);
}

double flow_loss_value(const Denoiser& model, const Tensor& z0, const Tensor& eps,
                       const std::vector<int>& slots, NoiseLevel t, const Tensor& cond) {
    Graph g;
    auto b = model.bind(g);
    return g.value(flow_loss(g, model, b, z0, eps, slots, t, cond)).at(0);
}

double sample_time(Rng& rng) { return rng.uniform(); }

Tensor euler_integrate(const VelocityFn& velocity, Tensor z, int num_steps) {
    if (num_steps < 1) fail(ErrorKind::config, "euler_integrate: num_steps must be >= 1");
    const double dt = 1.0 / static_cast<double>(num_steps);
    for (int s = 0; s < num_steps; ++s) {
        const double t = static_cast<double>(s) * dt;
        Tensor v = velocity(z, t);
        if (!v.same_shape(z)) fail(ErrorKind::shape, "euler_integrate: velocity shape mismatch");
        // the trained target eps - z0 points against the flow direction
        for (std::int64_t i = 0; i < z.numel(); ++i) z.at(i) -= dt * v.at(i);
    }
    return z;
}

AssetLatent euler_sample(const Denoiser& model, const Tensor& cond, int n_parts,
                         const SamplerConfig& config, Rng& rng) {
    config.validate();
    const auto& cfg = model.config();
    if (n_parts < 1 || n_parts > cfg.max_parts)
        fail(ErrorKind::capacity, "euler_sample: part count " + std::to_string(n_parts) +
                                      " outside [1, " + std::to_string(cfg.max_parts) + "]");
    Tensor z({n_parts * cfg.tokens_per_part, cfg.width});
    for (std::int64_t i = 0; i < z.numel(); ++i) z.at(i) = rng.normal();
    std::vector<int> slots(static_cast<std::size_t>(n_parts));
    for (int i = 0; i < n_parts; ++i) slots[static_cast<std::size_t>(i)] = i;

    Tensor z1 = euler_integrate(
        [&](const Tensor& zc, double t) { return model.predict(zc, slots, t, cond); }, std::move(z),
        config.num_steps);
    return split(z1, n_parts, cfg.tokens_per_part);
}

namespace {

struct Buckets {
    std::vector<int> sizes;                      // distinct part counts, ascending
    std::map<int, std::vector<std::size_t>> by_n;
};

Buckets bucket_by_part_count(const std::vector<TrainExample>& dataset) {
    Buckets b;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        b.by_n[dataset[i].z0.part_count()].push_back(i);
    for (const auto& [n, _] : b.by_n) b.sizes.push_back(n);
    return b;
}

// Weighted bucket choice honoring the monolithic fraction.
int choose_bucket(const Buckets& b, double monolithic_fraction, Rng& rng) {
    const bool has_mono = b.by_n.count(1) > 0;
    std::vector<int> multi;
    for (int n : b.sizes)
        if (n != 1) multi.push_back(n);
    if (has_mono && (multi.empty() || rng.uniform() < monolithic_fraction)) return 1;
    if (multi.empty()) fail(ErrorKind::domain, "training dataset is empty");
    // weight by bucket population
    std::size_t total = 0;
    for (int n : multi) total += b.by_n.at(n).size();
    std::uint64_t pick = rng.below(total);
    for (int n : multi) {
        const std::size_t sz = b.by_n.at(n).size();
        if (pick < sz) return n;
        pick -= sz;
    }
    return multi.back();
}

} // namespace

TrainResult train(const std::vector<TrainExample>& dataset, const TrainingPlan& plan,
                  Denoiser& model, AdamState& adam, std::int64_t start_step) {
    plan.validate();
    if (dataset.empty()) fail(ErrorKind::domain, "train: empty dataset");
    for (const TrainExample& ex : dataset) ex.z0.validate(model.config().max_parts);
    if (adam.m.size() != model.params().size())
        fail(ErrorKind::contract, "train: adam state does not match the parameter store");

    const Buckets buckets = bucket_by_part_count(dataset);
    Rng run_rng(plan.seed);
    TrainResult result;
    result.trace.reserve(static_cast<std::size_t>(plan.steps));

    for (std::int64_t step = start_step + 1; step <= start_step + plan.steps; ++step) {
        Rng step_rng = run_rng.fork(static_cast<std::uint64_t>(step));
        const int bucket_n = choose_bucket(buckets, plan.monolithic_fraction, step_rng);
        const auto& pool = buckets.by_n.at(bucket_n);

        Graph g;
        auto bound = model.bind(g);
        std::vector<Var> losses;
        double t_sum = 0.0;
        std::map<int, int> histogram;
        for (int item = 0; item < plan.batch_size; ++item) {
            const TrainExample& ex = dataset[pool[step_rng.below(pool.size())]];
            AssetLatent asset = plan.shuffle_parts ? shuffle_parts(ex.z0, step_rng) : ex.z0;
            Tensor z0 = concat(asset);
            Tensor eps(z0.shape());
            for (std::int64_t i = 0; i < eps.numel(); ++i) eps.at(i) = step_rng.normal();
            const NoiseLevel t(sample_time(step_rng));
            t_sum += t.t;
            histogram[asset.part_count()] += 1;
            try {
                losses.push_back(
                    flow_loss(g, model, bound, z0, eps, asset.slots(), t, ex.cond));
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::numeric)
                    fail(ErrorKind::numeric,
                         "non-finite loss at step " + std::to_string(step) + " (seed " +
                             std::to_string(plan.seed) + ", batch item " + std::to_string(item) +
                             "): " + e.what());
                throw;
            }
        }
        Var batch_loss = losses[0];
        for (std::size_t i = 1; i < losses.size(); ++i) batch_loss = add(batch_loss, losses[i]);
        batch_loss = scale(batch_loss, 1.0 / static_cast<double>(plan.batch_size));

        const double loss_value = g.value(batch_loss).at(0);
        if (!std::isfinite(loss_value))
            fail(ErrorKind::numeric, "non-finite loss at step " + std::to_string(step) +
                                         " (seed " + std::to_string(plan.seed) + ")");
        g.backward(batch_loss);

        adam.t += 1;
        const double bc1 = 1.0 - std::pow(plan.adam_beta1, static_cast<double>(adam.t));
        const double bc2 = 1.0 - std::pow(plan.adam_beta2, static_cast<double>(adam.t));
        for (std::size_t p = 0; p < model.params().size(); ++p) {
            Tensor& theta = model.params()[p].value;
            const Tensor& grad = g.grad(bound.vars[p]);
            Tensor& m = adam.m[p];
            Tensor& v = adam.v[p];
            for (std::int64_t i = 0; i < theta.numel(); ++i) {
                const double gi = grad.at(i);
                m.at(i) = plan.adam_beta1 * m.at(i) + (1.0 - plan.adam_beta1) * gi;
                v.at(i) = plan.adam_beta2 * v.at(i) + (1.0 - plan.adam_beta2) * gi * gi;
                const double mhat = m.at(i) / bc1;
                const double vhat = v.at(i) / bc2;
                theta.at(i) -= plan.learning_rate * mhat / (std::sqrt(vhat) + plan.adam_eps);
            }
        }

        LossTracePoint pt;
        pt.step = step;
        pt.loss = loss_value;
        pt.t_mean = t_sum / static_cast<double>(plan.batch_size);
        for (const auto& [n, count] : histogram) pt.n_histogram.emplace_back(n, count);
        result.trace.push_back(std::move(pt));
        result.final_step = step;
    }
    return result;
}

void write_loss_trace_csv(const std::string& path, const std::vector<LossTracePoint>& trace,
                          bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open loss trace for writing: " + path);
    if (!append) out << "step,loss,t_mean,n_histogram\n";
    char buf[64];
    for (const LossTracePoint& pt : trace) {
        std::ostringstream hist;
        for (std::size_t i = 0; i < pt.n_histogram.size(); ++i) {
            if (i) hist << '|';
            hist << pt.n_histogram[i].first << ':' << pt.n_histogram[i].second;
        }
        out << pt.step << ',';
        std::snprintf(buf, sizeof buf, "%.17g", pt.loss);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", pt.t_mean);
        out << buf << ',' << hist.str() << '\n';
    }
    if (!out) fail(ErrorKind::io, "failed writing loss trace: " + path);
}

} // namespace partforge
