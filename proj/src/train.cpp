#include "comgan/train.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace comgan {

void adam_step(std::vector<Matrix*> params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw ad::ShapeError("adam_step: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols())
      throw ad::ShapeError("adam_step: gradient " + std::to_string(i) + " has the wrong shape");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.m.size() != params.size()) {
    throw ad::ShapeError("adam_step: state belongs to a different parameter set");
  }

  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (m.rows() != grads[i].rows() || m.cols() != grads[i].cols())
      throw ad::ShapeError("adam_step: state belongs to a different parameter set");
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads[i];
    v = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grads[i].array().square();
    params[i]->array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
  }
}

std::vector<Matrix*> parameter_refs(MlpParams& params) {
  std::vector<Matrix*> out;
  for (Layer& l : params.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SeedSet SeedSet::from_master(std::uint64_t master) {
  std::uint64_t s = master;
  SeedSet out{};
  out.data = splitmix64(s);
  out.prior = splitmix64(s);
  out.pairing = splitmix64(s);
  out.init = splitmix64(s);
  out.eval = splitmix64(s);
  return out;
}

namespace {

struct StepResult {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

bool diverged(double loss) { return !std::isfinite(loss) || std::abs(loss) > kDivergenceThreshold; }

class Trainer {
 public:
  explicit Trainer(const TrainConfig& c)
      : cfg_(c),
        spec_(mixture_by_name(c.data_spec)),
        prior_{c.gen_sizes.front()},
        seeds_(SeedSet::from_master(c.seed)),
        data_rng_(seeds_.data),
        prior_rng_(seeds_.prior),
        pairing_rng_(seeds_.pairing),
        eval_rng_(seeds_.eval) {
    std::mt19937_64 init_rng(seeds_.init);
    const std::uint64_t gen_seed = init_rng();
    const std::uint64_t disc_seed = init_rng();
    gen_ = mlp_init(c.gen_sizes, gen_seed);
    disc_ = mlp_init(c.disc_network_sizes(), disc_seed);
    reference_ = sample_mixture(spec_, kMetricSamples, eval_rng_);
  }

  StepResult disc_step(std::mt19937_64& data_rng, std::mt19937_64& prior_rng, std::mt19937_64& pairing_rng,
                       bool want_grads) {
    const Index b = cfg_.batch_size;
    const Matrix real = sample_mixture(spec_, b, data_rng);
    const Matrix fake = mlp_eval(gen_, prior_.sample(b, prior_rng));
    const BatchPairing pairing = make_pairing(b, std::max(cfg_.structure.slots() - 1, 1), pairing_rng);

    ad::Tape tape;
    const BoundMlp disc = bind_parameters(tape, disc_);
    const Var loss = disc_loss(cfg_.family, cfg_.structure, disc, tape.input(real), tape.input(fake), cfg_.reg, pairing);
    StepResult r{loss.scalar(), {}};
    if (want_grads && !diverged(r.loss)) {
      const ad::Gradients g = ad::backward(loss);
      for (const Var& p : disc.parameters()) r.grads.push_back(g[p]);
    }
    return r;
  }

  StepResult gen_step(std::mt19937_64& data_rng, std::mt19937_64& prior_rng, std::mt19937_64& pairing_rng,
                      bool want_grads) {
    const Index b = cfg_.batch_size;
    const Matrix real = sample_mixture(spec_, b, data_rng);
    const Matrix z = prior_.sample(b, prior_rng);
    std::optional<Matrix> z_other;
    if (cfg_.source == ComparativeSource::FakeData)
      z_other = prior_.sample(b, prior_rng);
    const BatchPairing pairing = make_pairing(b, std::max(cfg_.structure.slots() - 1, 1), pairing_rng);

    ad::Tape tape;
    const BoundMlp gen = bind_parameters(tape, gen_);
    const BoundMlp disc = bind_constants(tape, disc_);
    const Var fake = mlp_forward(gen, tape.input(z));
    std::optional<Var> other;
    if (z_other) other = mlp_forward(gen, tape.input(*z_other));
    const Var loss = gen_loss(cfg_.family, cfg_.structure, cfg_.source, disc, tape.input(real), fake, other, pairing);
    StepResult r{loss.scalar(), {}};
    if (want_grads && !diverged(r.loss)) {
      const ad::Gradients g = ad::backward(loss);
      for (const Var& p : gen.parameters()) r.grads.push_back(g[p]);
    }
    return r;
  }

  RunRow metrics_row(int step, double disc_loss_value, double gen_loss_value) {
    const Matrix samples = mlp_eval(gen_, prior_.sample(kMetricSamples, eval_rng_));
    const ModeMetrics m = mode_metrics(samples, spec_);
    RunRow row;
    row.step = step;
    row.disc_loss = disc_loss_value;
    row.gen_loss = gen_loss_value;
    row.modes_captured = m.modes_captured;
    row.high_quality_fraction = m.high_quality_fraction;
    row.hist_jsd = hist_jsd(reference_, samples, spec_.extent());
    if (cfg_.structure.shares_phi()) {
      const EqualityResiduals r = equality_residuals(disc_, reference_, samples);
      row.equality_residual_real = r.real;
      row.equality_residual_fake = r.fake;
    }
    return row;
  }

  RunRecord run(const RowCallback& on_row) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config = cfg_;
    rec.centers = spec_.centers;

    auto emit = [&](RunRow row) {
      rec.rows.push_back(row);
      if (on_row) on_row(rec.rows.back());
    };
    auto abort_run = [&](int step, const char* which, double disc_value, double gen_value, const std::string& why) {
      RunRow row = metrics_row(step, disc_value, gen_value);
      row.diverged = which;
      emit(row);
      rec.status = RunStatus::Aborted;
      rec.abort_reason = "unbounded/divergence: " + std::string(which) + " " + why + " at step " + std::to_string(step);
    };

    // Initial losses use the evaluation stream so the training streams stay untouched.
    double last_disc = 0.0;
    double last_gen = 0.0;
    bool aborted = false;
    try {
      last_disc = disc_step(eval_rng_, eval_rng_, eval_rng_, false).loss;
      last_gen = gen_step(eval_rng_, eval_rng_, eval_rng_, false).loss;
    } catch (const ad::NonFiniteError&) {
      last_disc = std::nan("");
    }
    emit(metrics_row(0, last_disc, last_gen));

    AdamConfig adam{cfg_.learning_rate, cfg_.adam_beta1, cfg_.adam_beta2};
    AdamState disc_state;
    AdamState gen_state;
    const int n_d = cfg_.discriminator_steps();

    for (int step = 1; step <= cfg_.total_steps && !aborted; ++step) {
      adam.lr = cfg_.learning_rate_at(step);
      for (int k = 0; k < n_d && !aborted; ++k) {
        StepResult r;
        try {
          r = disc_step(data_rng_, prior_rng_, pairing_rng_, true);
        } catch (const ad::NonFiniteError& e) {
          abort_run(step, "disc_loss", std::nan(""), last_gen, e.what());
          aborted = true;
          break;
        }
        last_disc = r.loss;
        if (diverged(r.loss)) {
          abort_run(step, "disc_loss", r.loss, last_gen, std::isfinite(r.loss) ? "exceeded 1e8" : "non-finite");
          aborted = true;
          break;
        }
        adam_step(parameter_refs(disc_), r.grads, disc_state, adam);
        if (cfg_.reg.kind == RegKind::WeightClip) clip_weights(disc_, cfg_.reg.clip);
      }
      if (aborted) break;

      StepResult r;
      try {
        r = gen_step(data_rng_, prior_rng_, pairing_rng_, true);
      } catch (const ad::NonFiniteError& e) {
        abort_run(step, "gen_loss", last_disc, std::nan(""), e.what());
        break;
      }
      last_gen = r.loss;
      if (diverged(r.loss)) {
        abort_run(step, "gen_loss", last_disc, r.loss, std::isfinite(r.loss) ? "exceeded 1e8" : "non-finite");
        break;
      }
      adam_step(parameter_refs(gen_), r.grads, gen_state, adam);

      if (step % cfg_.log_every == 0 || step == cfg_.total_steps) emit(metrics_row(step, last_disc, last_gen));
    }

    rec.final_samples = mlp_eval(gen_, prior_.sample(kScatterSamples, eval_rng_));
    bool have_best = false;
    for (const RunRow& row : rec.rows) {
      if (!std::isfinite(row.hist_jsd)) continue;
      if (!have_best || row.hist_jsd < rec.best_hist_jsd) {
        rec.best_hist_jsd = row.hist_jsd;
        rec.modes_at_best = row.modes_captured;
        have_best = true;
      }
    }
    rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
  }

 private:
  TrainConfig cfg_;
  MixtureSpec spec_;
  GenPrior prior_;
  SeedSet seeds_;
  std::mt19937_64 data_rng_;
  std::mt19937_64 prior_rng_;
  std::mt19937_64 pairing_rng_;
  std::mt19937_64 eval_rng_;
  MlpParams gen_;
  MlpParams disc_;
  Matrix reference_;
};

}  // namespace

RunRecord train(const TrainConfig& config, const RowCallback& on_row) {
  config.validate();
  Trainer t(config);
  return t.run(on_row);
}

}  // namespace comgan
