#include "genspec/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <set>
#include <thread>

#include "genspec/cooccurrence.hpp"
#include "genspec/decomposition.hpp"
#include "genspec/errors.hpp"
#include "genspec/spectral.hpp"

namespace genspec {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {"experiment", "toy",    "objectives", "rank",  "rho_m",     "hparams",
                                          "seed",       "output_dir", "trials", "group", "t_grid", "reg",
                                          "neighbors"};
const std::set<std::string> kHparamKeys = {"lr", "steps", "dim", "init_scale"};

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("invalid value: ") + e.what());
  }
}

std::string slug(const ObjectiveSpec& spec) {
  std::string s = spec.to_string();
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ':' || c == '-' || c == '.'; }, '_');
  return s;
}

// Runs fn(0..n-1) on up to hardware_concurrency threads. Each call owns its
// outputs, so results do not depend on scheduling.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json spectrum_json(const SingularSpectrum& s) { return json(s.values); }

std::vector<Eigen::VectorXd> unit_rows(const Eigen::MatrixXd& features) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    Eigen::VectorXd v = features.row(i).transpose();
    const double n = v.norm();
    out.push_back(n > 0.0 ? Eigen::VectorXd(v / n) : v);
  }
  return out;
}

int capped_rank(int t, const NormalizedMatrix& m) {
  return std::min<int>(t, static_cast<int>(std::min(m.values.rows(), m.values.cols())));
}

// ---- spectrum ---------------------------------------------------------------

json run_spectrum(const ExperimentConfig& c, const std::filesystem::path& dir) {
  const int t = c.effective_rank();
  json objectives = json::array();
  for (const auto& spec : c.resolved_objectives()) {
    const JointDistribution joint = build_joint(spec, c.toy);
    const NormalizedMatrix m = normalize(joint);
    const SingularSpectrum numeric = singular_spectrum(m);
    json entry;
    entry["objective"] = spec.to_string();
    entry["rows"] = m.values.rows();
    entry["cols"] = m.values.cols();
    entry["spectrum"] = spectrum_json(numeric);
    entry["tail_energy"] = tail_energy(numeric, static_cast<std::size_t>(t));
    entry["labeling_error"] = labeling_error(joint, toy_labeler(c.toy));

    std::optional<SingularSpectrum> closed;
    if (spec.kind == ObjectiveSpec::Kind::ar) closed = theorem3_ar_spectrum(c.toy);
    if (spec.kind == ObjectiveSpec::Kind::masked && c.toy.s * spec.rho > 1.0 + 1e-9)
      closed = theorem3_masked_spectrum(c.toy, spec.rho);
    if (closed) {
      entry["closed_form"] = spectrum_json(*closed);
      entry["closed_form_tail_energy"] = tail_energy(*closed, static_cast<std::size_t>(t));
      entry["max_abs_error"] = max_abs_difference(numeric, *closed);
    } else {
      entry["closed_form"] = nullptr;
      entry["max_abs_error"] = nullptr;
    }

    const FactorPair pair = optimal_features(m, capped_rank(t, m));
    const EncoderTable enc = encoder_from_pair(pair, m.rows, m.p_c);
    entry["connectivity"] = connectivity_estimate(unit_rows(enc.features), c.neighbors);

    std::ofstream csv(dir / ("normalized_" + slug(spec) + ".csv"));
    write_triplets(csv, m);
    objectives.push_back(std::move(entry));
  }
  return {{"rank", t}, {"objectives", std::move(objectives)}};
}

// ---- theorem1 ---------------------------------------------------------------

json run_theorem1(const ExperimentConfig& c, const std::filesystem::path&) {
  json objectives = json::array();
  for (const auto& spec : c.resolved_objectives()) {
    const JointDistribution joint = build_joint(spec, c.toy);
    std::vector<double> residuals(static_cast<std::size_t>(c.trials));
    parallel_for(c.trials, [&](int trial) {
      Rng rng(derive_seed(c.seed, "theorem1/" + spec.to_string(), static_cast<std::uint64_t>(trial)));
      const int t = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.effective_rank() + 2)));
      EncoderTable enc{joint.rows(), Eigen::MatrixXd(static_cast<Eigen::Index>(joint.rows().size()), t)};
      TokenEmbedding emb{joint.cols(), Eigen::MatrixXd(static_cast<Eigen::Index>(joint.cols().size()), t)};
      for (Eigen::Index j = 0; j < t; ++j) {
        for (Eigen::Index i = 0; i < enc.features.rows(); ++i) enc.features(i, j) = standard_normal(rng);
        for (Eigen::Index i = 0; i < emb.weights.rows(); ++i) emb.weights(i, j) = standard_normal(rng);
      }
      residuals[static_cast<std::size_t>(trial)] = theorem1_residual(enc, emb, joint);
    });
    const double worst = residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
    objectives.push_back({{"objective", spec.to_string()},
                          {"constant", decomposition_constant(joint)},
                          {"residuals", residuals},
                          {"max_residual", worst}});
  }
  return {{"trials", c.trials}, {"objectives", std::move(objectives)}};
}

// ---- factorize --------------------------------------------------------------

json run_factorize(const ExperimentConfig& c, const std::filesystem::path&) {
  std::vector<int> ranks = c.t_grid;
  if (ranks.empty()) ranks = {c.effective_rank(), c.effective_rank() + 2};
  json runs = json::array();
  for (const auto& spec : c.resolved_objectives()) {
    const NormalizedMatrix m = normalize(build_joint(spec, c.toy));
    for (int requested : ranks) {
      const int t = capped_rank(requested, m);
      Rng rng(derive_seed(c.seed, "factorize/" + spec.to_string(), static_cast<std::uint64_t>(requested)));
      GdOptions opt;
      if (c.hparams_given) {
        opt.lr = c.hparams.lr;
        opt.max_steps = c.hparams.steps;
        opt.init_scale = c.hparams.init_scale;
      }
      const GdResult gd = gd_factorize(m, t, opt, rng);
      const double eckart_young = decomposition_objective(optimal_features(m, t), m);
      runs.push_back({{"objective", spec.to_string()},
                      {"t_requested", requested},
                      {"t", t},
                      {"gd_objective", gd.objective},
                      {"optimal_objective", eckart_young},
                      {"relative_gap", (gd.objective - eckart_young) / std::max(eckart_young, 1e-300)},
                      {"converged", gd.converged},
                      {"steps", gd.steps},
                      {"trajectory", gd.trajectory}});
    }
  }
  return {{"runs", std::move(runs)}};
}

// ---- probe ------------------------------------------------------------------

json run_probe(const ExperimentConfig& c, const std::filesystem::path&) {
  json objectives = json::array();
  for (const auto& spec : c.resolved_objectives()) {
    const JointDistribution joint = build_joint(spec, c.toy);
    const NormalizedMatrix m = normalize(joint);
    const int t = capped_rank(c.effective_rank(), m);
    const EncoderTable enc = encoder_from_pair(optimal_features(m, t), m.rows, m.p_c);
    auto examples = probe_examples(enc, m.p_c, toy_labeler(c.toy));
    const ProbeResult base = linear_probe(examples, c.reg);

    // Re-fit after a random invertible transform of the features.
    Rng rng(derive_seed(c.seed, "probe/" + spec.to_string()));
    Eigen::MatrixXd a(t, t);
    for (Eigen::Index j = 0; j < t; ++j)
      for (Eigen::Index i = 0; i < t; ++i) a(i, j) = standard_normal(rng);
    a += 2.0 * Eigen::MatrixXd::Identity(t, t);
    for (auto& ex : examples) ex.x = a.transpose() * ex.x;
    const ProbeResult transformed = linear_probe(examples, c.reg);

    objectives.push_back({{"objective", spec.to_string()},
                          {"t", t},
                          {"reg", c.reg},
                          {"error", base.error},
                          {"transformed_error", transformed.error},
                          {"predictions_invariant", base.predictions == transformed.predictions}});
  }
  return {{"objectives", std::move(objectives)}};
}

// ---- genbound ---------------------------------------------------------------

struct ModelRun {
  std::string objective;
  int trial = 0;
  TrainedModel trained;
  GenLoss gen;
  double perplexity = 0.0;
  double delta_ar = 0.0;
  std::optional<Theorem4Terms> terms;
};

ModelRun train_and_evaluate(const ExperimentConfig& c, const ObjectiveSpec& spec, int trial,
                            const std::vector<LabeledSequence>& data, const std::string& stream) {
  Rng rng(derive_seed(c.seed, stream + "/" + spec.to_string(), static_cast<std::uint64_t>(trial)));
  ModelRun run;
  run.objective = spec.to_string();
  run.trial = trial;
  run.trained = train_model(spec, c.toy, c.hparams, rng);
  run.gen = gen_loss(run.trained.model, data);
  run.perplexity = perplexity(run.trained.model, data);
  run.delta_ar = pretraining_error(run.trained.model, build_ar_joint(c.toy));
  if (spec.kind == ObjectiveSpec::Kind::masked && unmasked_count(c.toy.s, spec.rho) >= 2)
    run.terms = theorem4_terms(run.trained.model, c.toy, spec.rho, data);
  return run;
}

json terms_json(const Theorem4Terms& t) {
  return {{"k", t.k},     {"w", t.w}, {"eta", t.eta}, {"delta", t.delta}, {"spectral_norm_w", t.spectral_norm_w},
          {"s", t.s},     {"rho_m", t.rho_m}, {"bound", theorem4_masked_bound(t)}};
}

json run_genbound(const ExperimentConfig& c, const std::filesystem::path&) {
  const auto data = enumerate_sequences(c.toy);
  const auto specs = c.resolved_objectives();
  const int n = static_cast<int>(specs.size()) * c.trials;
  std::vector<ModelRun> runs(static_cast<std::size_t>(n));
  parallel_for(n, [&](int i) {
    runs[static_cast<std::size_t>(i)] =
        train_and_evaluate(c, specs[static_cast<std::size_t>(i / c.trials)], i % c.trials, data, "genbound");
  });

  json models = json::array();
  for (const auto& run : runs) {
    json m = {{"objective", run.objective},
              {"trial", run.trial},
              {"pretraining_loss", run.trained.final_loss},
              {"pretraining_optimum", run.trained.optimum},
              {"gradient_check_error", run.trained.gradient_check_error},
              {"gen_loss", run.gen.total},
              {"per_k", {{"k", run.gen.k}, {"loss", run.gen.per_k}}},
              {"perplexity", run.perplexity},
              {"delta_ar", run.delta_ar}};
    if (run.terms) {
      m["terms"] = terms_json(*run.terms);
      const double bound = theorem4_masked_bound(*run.terms);
      m["bound"] = bound;
      m["bound_holds"] = run.gen.total <= bound;
      // gap against the AR model trained in the same trial, when present
      for (const auto& other : runs)
        if (other.objective == "ar" && other.trial == run.trial) m["gap_vs_ar"] = generation_gap(*run.terms, other.delta_ar);
    }
    models.push_back(std::move(m));
  }
  return {{"hparams", {{"lr", c.hparams.lr}, {"steps", c.hparams.steps}, {"dim", c.hparams.dim},
                       {"init_scale", c.hparams.init_scale}}},
          {"models", std::move(models)}};
}

// ---- masks ------------------------------------------------------------------

// Largest change of any query-stream row after perturbing H at positions
// that row may not see, over every row and forbidden position.
double perturbation_drift(const GroupAssignment& a, const AttentionWeights& w, Rng& rng) {
  const int s = a.length();
  const auto d = w.wq.rows();
  const CausalMaskPair masks = build_masks(a);
  Eigen::MatrixXd h(s, d), g(s, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < s; ++i) {
      h(i, j) = standard_normal(rng);
      g(i, j) = standard_normal(rng);
    }
  const StreamPair base = two_stream_layer(h, g, masks, w);
  double drift = 0.0;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      if (mask_allows(masks.g, i, j)) continue;
      Eigen::MatrixXd h2 = h;
      for (Eigen::Index c = 0; c < d; ++c) h2(j, c) += 1.0 + standard_normal(rng);
      const StreamPair moved = two_stream_layer(h2, g, masks, w);
      drift = std::max(drift, (moved.g.row(i) - base.g.row(i)).cwiseAbs().maxCoeff());
    }
  return drift;
}

json run_masks(const ExperimentConfig& c, const std::filesystem::path& dir) {
  const int s = c.toy.s;
  const GroupAssignment a = partition_groups(s, c.group.g1, c.group.t);
  const CausalMaskPair masks = build_masks(a);
  {
    std::ofstream h(dir / "mask_h.csv");
    write_mask_csv(h, masks.h);
    std::ofstream g(dir / "mask_g.csv");
    write_mask_csv(g, masks.g);
  }
  const int dim = c.hparams.dim;
  Rng rng(derive_seed(c.seed, "masks"));
  const TwoStreamModel model = TwoStreamModel::random(c.toy.vocab_size(), s, dim, c.hparams.init_scale, rng);

  const std::vector<GroupAssignment> assignments = s <= 6 ? all_assignments(s) : std::vector<GroupAssignment>{a};
  double drift = 0.0;
  for (const auto& assignment : assignments) drift = std::max(drift, perturbation_drift(assignment, model.weights, rng));

  const auto data = enumerate_sequences(c.toy);
  const std::size_t sample = std::min<std::size_t>(data.size(), 64);
  double ar_gap = 0.0, pooled_gap = 0.0, pooled_mean = 0.0, dar_mean = 0.0;
  for (std::size_t i = 0; i < sample; ++i) {
    const auto& x = data[i];
    ar_gap = std::max(ar_gap, std::abs(semi_ar_loss(model, x, partition_groups(s, 1, 1)) - ar_loss(model, x)));
    const double pooled = pooled_semi_ar_loss(model, x, c.group.t);
    const double dar = dar_loss(model, x, c.group.t);
    pooled_gap = std::max(pooled_gap, std::abs(pooled - dar));
    pooled_mean += pooled / static_cast<double>(sample);
    dar_mean += dar / static_cast<double>(sample);
  }
  return {{"assignment", a.groups()},
          {"group", {{"g1", c.group.g1}, {"t", c.group.t}}},
          {"assignments_checked", assignments.size()},
          {"max_forbidden_drift", drift},
          {"ar_reduction_max_diff", ar_gap},
          {"pooled_vs_dar_max_diff", pooled_gap},
          {"pooled_semi_ar_loss", pooled_mean},
          {"dar_loss", dar_mean},
          {"target_tv", total_variation(semi_ar_target_distribution(s, c.group.t), dar_target_distribution(s, c.group.t))}};
}

// ---- sweep ------------------------------------------------------------------

json run_sweep(const ExperimentConfig& c, const std::filesystem::path& dir) {
  const auto data = enumerate_sequences(c.toy);
  std::vector<ObjectiveSpec> specs;
  for (double rho : c.rho_m) specs.push_back(ObjectiveSpec::masked(rho));
  const int n = static_cast<int>(specs.size()) * c.trials;
  std::vector<ModelRun> runs(static_cast<std::size_t>(n));
  parallel_for(n, [&](int i) {
    runs[static_cast<std::size_t>(i)] =
        train_and_evaluate(c, specs[static_cast<std::size_t>(i / c.trials)], i % c.trials, data, "sweep");
  });

  std::ofstream csv(dir / "sweep.csv");
  csv.precision(17);
  csv << "spec,rho,seed,gen_loss,bound,delta,eta,normW2\n";
  json rows = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& run = runs[i];
    const ObjectiveSpec& spec = specs[i / static_cast<std::size_t>(c.trials)];
    const double bound = run.terms ? theorem4_masked_bound(*run.terms) : std::nan("");
    const double delta = run.terms ? run.terms->delta : std::nan("");
    const double eta = run.terms ? run.terms->eta : std::nan("");
    const double norm = run.terms ? run.terms->spectral_norm_w * run.terms->spectral_norm_w : std::nan("");
    csv << "masked," << spec.rho << ',' << run.trial << ',' << run.gen.total << ',' << bound << ',' << delta << ','
        << eta << ',' << norm << '\n';
    json row = {{"spec", run.objective}, {"rho", spec.rho}, {"seed", run.trial}, {"gen_loss", run.gen.total},
                {"per_k", {{"k", run.gen.k}, {"loss", run.gen.per_k}}}};
    if (run.terms) row.update({{"bound", bound}, {"delta", delta}, {"eta", eta}, {"normW2", norm}});
    rows.push_back(std::move(row));
  }

  // diversity-enhanced windows: spectral tail against plain AR
  std::vector<int> windows = c.t_grid;
  if (windows.empty()) windows = {1, 2};
  json dar = json::array();
  const std::size_t t = static_cast<std::size_t>(c.effective_rank());
  for (int w : windows) {
    const SingularSpectrum spec = singular_spectrum(normalize(build_dar_joint(c.toy, w)));
    dar.push_back({{"window", w}, {"tail_energy", tail_energy(spec, t)}, {"spectrum", spec.values}});
  }
  return {{"runs", std::move(rows)}, {"dar", std::move(dar)}};
}

using Runner = json (*)(const ExperimentConfig&, const std::filesystem::path&);

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> table = {
      {"spectrum", run_spectrum}, {"theorem1", run_theorem1}, {"factorize", run_factorize}, {"probe", run_probe},
      {"genbound", run_genbound}, {"masks", run_masks},       {"sweep", run_sweep}};
  return table;
}

void write_csv_with_warning(const std::filesystem::path& path, const std::string& header,
                            const std::function<bool(std::ostream&)>& body, std::vector<std::string>& skipped) {
  std::ofstream os(path);
  os.precision(17);
  os << header << '\n';
  if (!body(os)) skipped.push_back(path.filename().string());
}

}  // namespace

std::vector<ObjectiveSpec> ExperimentConfig::resolved_objectives() const {
  if (!objectives.empty()) return objectives;
  std::vector<ObjectiveSpec> out{ObjectiveSpec::ar()};
  for (double rho : rho_m) out.push_back(ObjectiveSpec::masked(rho));
  return out;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kKnownKeys.contains(key)) throw ConfigError(key, "unknown field");

  ExperimentConfig c;
  if (!j.contains("experiment")) throw ConfigError("experiment", "missing");
  c.experiment = get_field<std::string>(j, "experiment", "experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end())
    throw ConfigError("experiment", "unknown experiment '" + c.experiment + "'");

  if (!j.contains("toy")) throw ConfigError("toy", "missing");
  const json& toy = j.at("toy");
  if (!toy.is_object()) throw ConfigError("toy", "must be an object with r, s, T");
  for (const auto& [key, value] : toy.items())
    if (key != "r" && key != "s" && key != "T") throw ConfigError("toy." + key, "unknown field");
  for (const char* key : {"r", "s", "T"})
    if (!toy.contains(key)) throw ConfigError(std::string("toy.") + key, "missing");
  c.toy.r = get_field<int>(toy, "r", "toy.r");
  c.toy.s = get_field<int>(toy, "s", "toy.s");
  c.toy.T = get_field<int>(toy, "T", "toy.T");
  try {
    c.toy.validate();
  } catch (const DomainError& e) {
    throw ConfigError("toy", e.what());
  }

  if (j.contains("rho_m")) {
    const json& rho = j.at("rho_m");
    c.rho_m.clear();
    if (rho.is_number()) {
      c.rho_m.push_back(rho.get<double>());
    } else if (rho.is_array()) {
      for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!rho[i].is_number()) throw ConfigError("rho_m[" + std::to_string(i) + "]", "must be a number");
        c.rho_m.push_back(rho[i].get<double>());
      }
    } else {
      throw ConfigError("rho_m", "must be a number or an array of numbers");
    }
  }
  for (std::size_t i = 0; i < c.rho_m.size(); ++i) {
    try {
      if (!(c.rho_m[i] > 0.0 && c.rho_m[i] < 1.0)) throw DomainError("rho_m = " + std::to_string(c.rho_m[i]) + " outside (0, 1)");
      unmasked_count(c.toy.s, c.rho_m[i]);
    } catch (const DomainError& e) {
      throw ConfigError("rho_m[" + std::to_string(i) + "]", e.what());
    }
  }

  if (j.contains("objectives")) {
    const json& list = j.at("objectives");
    if (!list.is_array()) throw ConfigError("objectives", "must be an array of strings");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "objectives[" + std::to_string(i) + "]";
      if (!list[i].is_string()) throw ConfigError(path, "must be a string such as ar, masked:0.5, dar:2, vlm:0.25-0.5");
      try {
        ObjectiveSpec spec = ObjectiveSpec::parse(list[i].get<std::string>());
        spec.validate(c.toy.s);
        c.objectives.push_back(spec);
      } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
      }
    }
  }

  if (j.contains("rank")) {
    c.rank = get_field<int>(j, "rank", "rank");
    if (c.rank < 1) throw ConfigError("rank", "must be >= 1");
  }
  if (j.contains("hparams")) {
    const json& hp = j.at("hparams");
    c.hparams_given = true;
    if (!hp.is_object()) throw ConfigError("hparams", "must be an object");
    for (const auto& [key, value] : hp.items())
      if (!kHparamKeys.contains(key)) throw ConfigError("hparams." + key, "unknown field");
    if (hp.contains("lr")) c.hparams.lr = get_field<double>(hp, "lr", "hparams.lr");
    if (hp.contains("steps")) c.hparams.steps = get_field<int>(hp, "steps", "hparams.steps");
    if (hp.contains("dim")) c.hparams.dim = get_field<int>(hp, "dim", "hparams.dim");
    if (hp.contains("init_scale")) c.hparams.init_scale = get_field<double>(hp, "init_scale", "hparams.init_scale");
  }
  if (!(c.hparams.lr > 0.0)) throw ConfigError("hparams.lr", "must be > 0");
  if (c.hparams.steps < 1) throw ConfigError("hparams.steps", "must be >= 1");
  if (c.hparams.dim < 1) throw ConfigError("hparams.dim", "must be >= 1");
  if (!(c.hparams.init_scale > 0.0)) throw ConfigError("hparams.init_scale", "must be > 0");

  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed", "seed");
  if (j.contains("output_dir")) c.output_dir = get_field<std::string>(j, "output_dir", "output_dir");
  if (j.contains("trials")) {
    c.trials = get_field<int>(j, "trials", "trials");
    if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
  }
  if (j.contains("group")) {
    try {
      c.group = parse_group_spec(get_field<std::string>(j, "group", "group"));
    } catch (const DomainError& e) {
      throw ConfigError("group", e.what());
    }
    if (c.group.g1 > c.toy.s) throw ConfigError("group", "first group longer than the sequence");
  }
  if (j.contains("t_grid")) {
    c.t_grid = get_field<std::vector<int>>(j, "t_grid", "t_grid");
    for (std::size_t i = 0; i < c.t_grid.size(); ++i)
      if (c.t_grid[i] < 1) throw ConfigError("t_grid[" + std::to_string(i) + "]", "must be >= 1");
  }
  if (j.contains("reg")) {
    c.reg = get_field<double>(j, "reg", "reg");
    if (!(c.reg >= 0.0)) throw ConfigError("reg", "must be >= 0");
  }
  if (j.contains("neighbors")) {
    c.neighbors = get_field<std::size_t>(j, "neighbors", "neighbors");
    if (c.neighbors < 1) throw ConfigError("neighbors", "must be >= 1");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, runner] : runners()) out.push_back(name);
    return out;
  }();
  return names;
}

json run_experiment(const ExperimentConfig& config, const std::filesystem::path& dir) {
  for (const auto& [name, runner] : runners()) {
    if (name != config.experiment) continue;
    json report = runner(config, dir);
    report["experiment"] = config.experiment;
    report["toy"] = config.toy;
    report["seed"] = config.seed;
    return report;
  }
  throw ConfigError("experiment", "unknown experiment '" + config.experiment + "'");
}

void write_report(const json& report, const std::filesystem::path& dir) {
  std::ofstream os(dir / "report.json");
  if (!os) throw ResourceError("cannot write " + (dir / "report.json").string());
  os << report.dump(2) << '\n';
}

std::vector<std::string> emit_plot_data(const json& report, const std::filesystem::path& dir) {
  std::vector<std::string> skipped;
  write_csv_with_warning(dir / "spectrum.csv", "objective,rank,sigma", [&](std::ostream& os) {
    if (!report.contains("objectives")) return false;
    for (const auto& o : report.at("objectives")) {
      if (!o.contains("spectrum")) return false;
      const auto& values = o.at("spectrum");
      for (std::size_t i = 0; i < values.size(); ++i)
        os << o.at("objective").get<std::string>() << ',' << i + 1 << ',' << values[i].get<double>() << '\n';
    }
    return true;
  }, skipped);
  write_csv_with_warning(dir / "perk.csv", "model,k,loss", [&](std::ostream& os) {
    if (!report.contains("models")) return false;
    for (const auto& m : report.at("models")) {
      const std::string name = m.at("objective").get<std::string>() + "#" + std::to_string(m.at("trial").get<int>());
      const auto& k = m.at("per_k").at("k");
      const auto& loss = m.at("per_k").at("loss");
      for (std::size_t i = 0; i < k.size(); ++i) os << name << ',' << k[i].get<int>() << ',' << loss[i].get<double>() << '\n';
    }
    return true;
  }, skipped);
  write_csv_with_warning(dir / "connectivity.csv", "objective,estimate", [&](std::ostream& os) {
    if (!report.contains("objectives")) return false;
    for (const auto& o : report.at("objectives")) {
      if (!o.contains("connectivity")) return false;
      os << o.at("objective").get<std::string>() << ',' << o.at("connectivity").get<double>() << '\n';
    }
    return true;
  }, skipped);
  return skipped;
}

std::filesystem::path run_to_directory(const ExperimentConfig& config) {
  const std::filesystem::path dir = std::filesystem::path(config.output_dir) / config.experiment;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create output directory " + dir.string() + ": " + ec.message());
  const json report = run_experiment(config, dir);
  write_report(report, dir);
  const auto skipped = emit_plot_data(report, dir);
  if (!skipped.empty()) {
    std::cerr << "warning: report has no data for";
    for (const auto& f : skipped) std::cerr << ' ' << f;
    std::cerr << "; header-only files written\n";
  }
  return dir;
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const ResourceError*>(&e)) return 4;
  return 1;
}

}  // namespace genspec
