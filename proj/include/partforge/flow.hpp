#pragma once

#include <functional>
#include <string>
#include <vector>

#include "partforge/denoiser.hpp"
#include "partforge/latent.hpp"

namespace partforge {

struct TrainingPlan {
    std::int64_t steps = 2000;
    int batch_size = 8;
    double learning_rate = 1e-3;
    double monolithic_fraction = 0.30; // share of batches drawn from single-part assets
    bool shuffle_parts = true;
    std::string bucketing = "by_part_count"; // batches group assets of identical N
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct SamplerConfig {
    int num_steps = 50;

    void validate() const;
};

// One training asset: data latent plus its condition tokens.
struct TrainExample {
    AssetLatent z0;
    Tensor cond;
};

struct LossTracePoint {
    std::int64_t step = 0;
    double loss = 0.0;
    double t_mean = 0.0;
    std::vector<std::pair<int, int>> n_histogram; // part count -> assets in batch
};

struct TrainResult {
    std::vector<LossTracePoint> trace;
    std::int64_t final_step = 0;
};

// Adam moments aligned with the model's parameter store.
struct AdamState {
    std::vector<Tensor> m, v;
    std::int64_t t = 0;

    static AdamState init(const Denoiser& model);
};

// || (eps - z0) - v_theta(z_t, t, cond) ||^2, meaned over all NK x C entries,
// with z_t = t*z0 + (1-t)*eps. Gradients flow into the bound model parameters.
Var flow_loss(Graph& g, const Denoiser& model, const Denoiser::Bound& b, const Tensor& z0,
              const Tensor& eps, const std::vector<int>& slots, NoiseLevel t, const Tensor& cond);
// Shared-t contract: one noise level per asset. Distinct per-part values are
// rejected, equal ones collapse to the scalar form.
Var flow_loss(Graph& g, const Denoiser& model, const Denoiser::Bound& b, const Tensor& z0,
              const Tensor& eps, const std::vector<int>& slots,
              const std::vector<NoiseLevel>& per_part_t, const Tensor& cond);
double flow_loss_value(const Denoiser& model, const Tensor& z0, const Tensor& eps,
                       const std::vector<int>& slots, NoiseLevel t, const Tensor& cond);

// t ~ Uniform[0,1), one draw per asset.
double sample_time(Rng& rng);

// Fixed-grid Euler integration of dz/dt = -velocity(z, t) from t=0 to t=1.
// The callback sees the shared t grid; one call per step for the whole latent.
using VelocityFn = std::function<Tensor(const Tensor& z, double t)>;
Tensor euler_integrate(const VelocityFn& velocity, Tensor z_init, int num_steps);

// Draw z at t=0 from a standard normal and integrate the trained field to t=1.
AssetLatent euler_sample(const Denoiser& model, const Tensor& cond, int n_parts,
                         const SamplerConfig& config, Rng& rng);

// Adam on flow_loss over bucketed batches. Step numbering is absolute so a
// resumed run replays the identical stream: step s always derives its
// randomness from fork(seed, s).
TrainResult train(const std::vector<TrainExample>& dataset, const TrainingPlan& plan,
                  Denoiser& model, AdamState& adam, std::int64_t start_step = 0);

void write_loss_trace_csv(const std::string& path, const std::vector<LossTracePoint>& trace,
                          bool append = false);

} // namespace partforge
