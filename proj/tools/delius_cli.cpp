// SPDX-License-Identifier: Apache-2.0
//
// delius: command-line front end over the C API.
#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "delius/delius.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---- exit codes ------------------------------------------------------------

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code(delius_status s) {
  switch (s) {
    case DELIUS_OK: return kExitOk;
    case DELIUS_ERR_CONFIG:
    case DELIUS_ERR_IO: return kExitUsage;
    case DELIUS_ERR_FORMAT:
    case DELIUS_ERR_DATA:
    case DELIUS_ERR_SHAPE: return kExitData;
    case DELIUS_ERR_NUMERIC:
    case DELIUS_ERR_DEGENERATE: return kExitNumeric;
    case DELIUS_ERR_INTERNAL: return kExitInternal;
  }
  return kExitInternal;
}

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{kExitUsage, msg}; }

std::string stage_prefix;

void check(delius_status s) {
  if (s != DELIUS_OK) {
    std::string msg = delius_last_error();
    if (msg.empty()) msg = delius_status_name(s);
    throw Failure{exit_code(s), stage_prefix.empty() ? msg : stage_prefix + ": " + msg};
  }
}

// ---- handle ownership --------------------------------------------------------

struct Free {
  void operator()(delius_matrix* p) const { delius_matrix_free(p); }
  void operator()(delius_labels* p) const { delius_labels_free(p); }
  void operator()(delius_model* p) const { delius_model_free(p); }
  void operator()(delius_clustering* p) const { delius_clustering_free(p); }
  void operator()(delius_report* p) const { delius_report_free(p); }
};
template <typename T>
using Handle = std::unique_ptr<T, Free>;

template <typename T>
struct Out {
  Handle<T>& target;
  T* raw = nullptr;
  explicit Out(Handle<T>& h) : target(h) {}
  ~Out() { target.reset(raw); }
  operator T**() { return &raw; }
};

// ---- helpers ------------------------------------------------------------------

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw Failure{kExitUsage, what + " not found: " + path};
}

delius_format format_for(const std::string& path, const std::string& requested) {
  if (requested == "csv") return DELIUS_FORMAT_CSV;
  if (requested == "binary") return DELIUS_FORMAT_BINARY;
  return fs::path(path).extension() == ".csv" ? DELIUS_FORMAT_CSV : DELIUS_FORMAT_BINARY;
}

std::vector<size_t> parse_dims(const std::string& text) {
  std::vector<size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size() || v == 0)
      usage_error("invalid layer width '" + item + "' in --encoder-dims");
    dims.push_back(v);
  }
  if (dims.empty()) usage_error("--encoder-dims must list at least one width");
  return dims;
}

// ---- per-run context -----------------------------------------------------------

struct Run {
  CLI::App* app = nullptr;
  std::string manifest_path;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json extra = json::object();

  void input(const std::string& p) {
    if (!p.empty()) inputs.push_back(p);
  }
  void output(const std::string& p) {
    if (!p.empty()) outputs.push_back(p);
  }
};

struct Common {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string manifest;
};

int resolve_threads(int flag) {
  int threads = flag;
  if (threads <= 0) {
    if (const char* env = std::getenv("DELIUS_THREADS"); env && *env) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        usage_error(std::string("DELIUS_THREADS is not an integer: ") + env);
      }
    } else {
      threads = 1;
    }
  }
  if (threads < 1) usage_error("thread count must be at least 1");
  return threads;
}

json flag_values(const CLI::App* app) {
  json flags = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help" || name == "-h") continue;
    std::string key = opt->get_single_name();
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) flags[key] = true;
      else if (res.size() == 1) flags[key] = res.front();
      else flags[key] = res;
    } else if (opt->get_type_size() == 0) {
      flags[key] = false;
    } else {
      flags[key] = opt->get_default_str();
    }
  }
  return flags;
}

void write_manifest(const Run& run, const Common& common, int threads, int code,
                    const std::string& error, double seconds) {
  if (run.manifest_path.empty()) return;
  json m;
  m["tool"] = "delius";
  m["version"] = delius_version();
  m["subcommand"] = run.app->get_name();
  m["flags"] = flag_values(run.app);
  m["seed"] = common.seed;
  m["threads"] = threads;
  json inputs = json::array();
  for (const auto& p : run.inputs) inputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  m["inputs"] = inputs;
  json outputs = json::array();
  for (const auto& p : run.outputs)
    if (fs::exists(p)) outputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  m["outputs"] = outputs;
  for (const auto& [k, v] : run.extra.items()) m[k] = v;
  m["exit_code"] = code;
  if (!error.empty()) m["error"] = error;
  m["wall_seconds"] = seconds;
  std::ofstream out(run.manifest_path, std::ios::binary);
  out << m.dump(2) << '\n';
}

// ---- shared stage code -----------------------------------------------------------

struct FeatureOpts {
  std::string path;
  std::string format = "auto";
  bool header = false;
};

Handle<delius_matrix> load_matrix(const FeatureOpts& f, Run& run, const char* what) {
  require_file(f.path, what);
  run.input(f.path);
  Handle<delius_matrix> m;
  check(delius_matrix_read(f.path.c_str(), format_for(f.path, f.format), f.header ? 1 : 0, Out(m)));
  return m;
}

void write_matrix(const delius_matrix* m, const std::string& path, Run& run) {
  check(delius_matrix_write(m, path.c_str(), format_for(path, "auto"), DELIUS_DTYPE_F64));
  run.output(path);
}

Handle<delius_labels> load_truth(const std::string& manifest, const std::string& column,
                                 const delius_matrix* m, Run& run) {
  Handle<delius_labels> l;
  if (manifest.empty()) return l;
  require_file(manifest, "label manifest");
  run.input(manifest);
  check(delius_labels_from_manifest(manifest.c_str(), column.c_str(), m, Out(l)));
  return l;
}

void write_loss_curve(const delius_model* model, const std::string& path, Run& run) {
  size_t n = 0;
  const double* curve = delius_model_loss_curve(model, &n);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kExitUsage, "cannot open " + path + " for writing"};
  out << "epoch,loss\n";
  for (size_t i = 0; i < n; ++i) out << i << ',' << fmt(curve[i]) << '\n';
  run.output(path);
}

struct PretrainOpts {
  std::string encoder_dims = "500,500,2000,10";
  size_t epochs = 200;
  size_t batch = 256;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double init_std = 0.01;

  void add(CLI::App* app) {
    app->add_option("--encoder-dims", encoder_dims, "Encoder widths after the input layer")->capture_default_str();
    app->add_option("--epochs", epochs, "Pretraining epochs")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--batch", batch, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--beta1", beta1, "Adam beta1")->capture_default_str();
    app->add_option("--beta2", beta2, "Adam beta2")->capture_default_str();
    app->add_option("--eps", eps, "Adam epsilon")->capture_default_str();
    app->add_option("--init-std", init_std, "Weight initialization standard deviation")->capture_default_str();
  }
};

Handle<delius_model> pretrain_stage(const delius_matrix* features, const PretrainOpts& o,
                                    std::uint64_t seed, const std::string& failed_checkpoint,
                                    Run& run) {
  const auto dims = parse_dims(o.encoder_dims);
  delius_pretrain_config cfg;
  delius_pretrain_config_default(&cfg);
  cfg.encoder_dims = dims.data();
  cfg.encoder_depth = dims.size();
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.adam = {o.lr, o.beta1, o.beta2, o.eps};
  cfg.init_stddev = o.init_std;
  cfg.seed = seed;
  Handle<delius_model> model;
  const delius_status s = delius_pretrain(features, &cfg, nullptr, nullptr, Out(model));
  if (s == DELIUS_ERR_NUMERIC && model && !failed_checkpoint.empty()) {
    if (delius_model_save(model.get(), failed_checkpoint.c_str()) == DELIUS_OK) run.output(failed_checkpoint);
  }
  check(s);
  return model;
}

struct ClusterOpts {
  size_t k = 0;
  size_t update_interval = 140;
  double delta = 0.001;
  size_t batch = 256;
  size_t max_iter = 20000;
  size_t restarts = 20;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void add(CLI::App* app, bool with_adam) {
    app->add_option("--k", k, "Number of clusters (>= 2)")->required();
    app->add_option("--update-interval", update_interval, "Minibatch steps between target refreshes")->capture_default_str();
    app->add_option("--delta", delta, "Stop when the changed-label fraction falls below this")->capture_default_str();
    app->add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();
    app->add_option("--restarts", restarts, "k-means restarts for centroid initialization")->capture_default_str();
    if (with_adam) {
      app->add_option("--batch", batch, "Minibatch size")->capture_default_str();
      app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
      app->add_option("--beta1", beta1, "Adam beta1")->capture_default_str();
      app->add_option("--beta2", beta2, "Adam beta2")->capture_default_str();
      app->add_option("--eps", eps, "Adam epsilon")->capture_default_str();
    }
  }
};

Handle<delius_clustering> cluster_stage(const delius_matrix* features, const delius_model* model,
                                        const ClusterOpts& o, std::uint64_t seed) {
  delius_cluster_config cfg;
  delius_cluster_config_default(&cfg);
  cfg.k = o.k;
  cfg.update_interval = o.update_interval;
  cfg.delta = o.delta;
  cfg.batch_size = o.batch;
  cfg.max_iterations = o.max_iter;
  cfg.kmeans_restarts = o.restarts;
  cfg.adam = {o.lr, o.beta1, o.beta2, o.eps};
  cfg.seed = seed;
  Handle<delius_clustering> c;
  check(delius_cluster(features, model, &cfg, nullptr, nullptr, Out(c)));
  return c;
}

struct ProjectOpts {
  std::string method = "tsne";
  size_t r = 2;
  double perplexity = 30.0;
  size_t iterations = 1000;
  double learning_rate = 200.0;
  double fraction = 1.0;

  void add(CLI::App* app, double default_fraction) {
    fraction = default_fraction;
    app->add_option("--method", method, "Projection method")->capture_default_str()->check(CLI::IsMember({"pca", "tsne"}));
    app->add_option("--r", r, "PCA output dimensionality")->capture_default_str();
    app->add_option("--perplexity", perplexity, "t-SNE perplexity")->capture_default_str();
    app->add_option("--tsne-iter", iterations, "t-SNE iterations")->capture_default_str();
    app->add_option("--tsne-lr", learning_rate, "t-SNE learning rate")->capture_default_str();
    app->add_option("--fraction", fraction, "Stratified sample fraction before projecting")->capture_default_str();
  }
};

// Projects `points` (optionally a stratified sample over `strata`) and writes
// the coordinates table. Returns the projected matrix and the carried labels.
std::pair<Handle<delius_matrix>, Handle<delius_labels>> project_stage(
    const delius_matrix* points, const delius_labels* strata, const ProjectOpts& o, std::uint64_t seed,
    bool clamp_perplexity, const std::string& out_path, Run& run) {
  Handle<delius_matrix> sample;
  Handle<delius_labels> sample_labels;
  const delius_matrix* source = points;
  if (o.fraction < 1.0) {
    if (!strata) usage_error("--fraction below 1 needs cluster or class labels to stratify on");
    check(delius_stratified_sample(points, strata, o.fraction, seed, nullptr, Out(sample),
                                   Out(sample_labels)));
    source = sample.get();
  } else if (strata) {
    check(delius_labels_create(delius_labels_count(strata), delius_labels_data(strata), Out(sample_labels)));
  } else if (o.fraction <= 0.0) {
    usage_error("--fraction must lie in (0, 1]");
  }

  Handle<delius_matrix> xy;
  std::vector<std::string> names;
  if (o.method == "pca") {
    check(delius_pca(source, o.r, Out(xy)));
    for (size_t c = 1; c <= o.r; ++c) names.push_back("c_" + std::to_string(c));
  } else {
    delius_tsne_config cfg;
    delius_tsne_config_default(&cfg);
    cfg.perplexity = o.perplexity;
    cfg.iterations = o.iterations;
    cfg.learning_rate = o.learning_rate;
    cfg.seed = seed;
    const double m = static_cast<double>(delius_matrix_rows(source));
    const double ceiling = (m - 1.0) / 3.0;
    if (clamp_perplexity && cfg.perplexity >= ceiling && ceiling > 1.5) {
      cfg.perplexity = std::floor((ceiling - 0.5) * 100.0) / 100.0;
      std::cerr << "delius: perplexity " << fmt(o.perplexity) << " infeasible for " << m
                << " points, using " << fmt(cfg.perplexity) << '\n';
    }
    run.extra["perplexity_effective"] = cfg.perplexity;
    check(delius_tsne(source, &cfg, Out(xy)));
    names = {"x", "y"};
  }
  std::vector<const char*> cnames;
  for (const auto& n : names) cnames.push_back(n.c_str());
  check(delius_matrix_write_table(xy.get(), out_path.c_str(), cnames.data()));
  run.output(out_path);
  return {std::move(xy), std::move(sample_labels)};
}

// ---- main -----------------------------------------------------------------------

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DELIUS deep embedded clustering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(delius_version()));

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed")->capture_default_str();
    sub->add_option("--threads", common.threads,
                    "Thread cap (falls back to DELIUS_THREADS, then 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--manifest", common.manifest, "Run manifest path");
  };

  // pretrain
  FeatureOpts pt_feat;
  PretrainOpts pt;
  std::string pt_out, pt_loss;
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the autoencoder");
  pretrain->add_option("--features", pt_feat.path, "Feature matrix (DELF or CSV)")->required();
  pretrain->add_option("--format", pt_feat.format, "Input format")->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));
  pretrain->add_flag("--header", pt_feat.header, "CSV input has a header row");
  pt.add(pretrain);
  pretrain->add_option("--out", pt_out, "Checkpoint output path")->required();
  pretrain->add_option("--loss-csv", pt_loss, "Per-epoch loss CSV");
  add_common(pretrain);

  // cluster
  FeatureOpts cl_feat;
  ClusterOpts cl;
  std::string cl_ckpt, cl_assign, cl_out_ckpt, cl_history, cl_embedding;
  auto* cluster = app.add_subcommand("cluster", "Jointly refine the embedding and cluster centroids");
  cluster->add_option("--features", cl_feat.path, "Feature matrix (DELF or CSV)")->required();
  cluster->add_option("--format", cl_feat.format, "Input format")->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));
  cluster->add_flag("--header", cl_feat.header, "CSV input has a header row");
  cluster->add_option("--ae-checkpoint", cl_ckpt, "Pretrained autoencoder checkpoint")->required();
  cl.add(cluster, true);
  cluster->add_option("--out-assignments", cl_assign, "Assignments CSV output")->required();
  cluster->add_option("--out-checkpoint", cl_out_ckpt, "Encoder + centroids checkpoint output");
  cluster->add_option("--out-history", cl_history, "Refresh history CSV output");
  cluster->add_option("--out-embedding", cl_embedding, "Final embedding output (DELF or .csv)");
  add_common(cluster);

  // eval
  FeatureOpts ev_points;
  std::string ev_assign, ev_manifest, ev_out, ev_tag = "embedded";
  std::vector<std::string> ev_columns;
  auto* eval = app.add_subcommand("eval", "Evaluate a clustering");
  eval->add_option("--points", ev_points.path, "Points the metrics are computed in")->required();
  eval->add_option("--format", ev_points.format, "Input format")->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));
  eval->add_flag("--header", ev_points.header, "CSV input has a header row");
  eval->add_option("--assignments", ev_assign, "Assignments CSV")->required();
  eval->add_option("--labels-manifest", ev_manifest, "Label manifest CSV (id,style,genre)");
  eval->add_option("--label-column", ev_columns, "Label column(s) to score: style, genre")->check(CLI::IsMember({"style", "genre"}));
  eval->add_option("--space-tag", ev_tag, "Name of the space the points live in")->capture_default_str();
  eval->add_option("--out", ev_out, "Report JSON output")->required();
  add_common(eval);

  // baseline
  FeatureOpts bl_feat;
  std::string bl_strategy, bl_ckpt, bl_manifest, bl_out, bl_assign;
  std::vector<std::string> bl_columns;
  size_t bl_k = 0, bl_r = 200, bl_restarts = 20;
  auto* baseline = app.add_subcommand("baseline", "Run a comparison strategy");
  baseline->add_option("--strategy", bl_strategy, "pca-kmeans or ae-kmeans")->required()->check(CLI::IsMember({"pca-kmeans", "ae-kmeans"}));
  baseline->add_option("--features", bl_feat.path, "Feature matrix (DELF or CSV)")->required();
  baseline->add_option("--format", bl_feat.format, "Input format")->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));
  baseline->add_flag("--header", bl_feat.header, "CSV input has a header row");
  baseline->add_option("--ae-checkpoint", bl_ckpt, "Pretrained autoencoder (ae-kmeans)");
  baseline->add_option("--k", bl_k, "Number of clusters")->required();
  baseline->add_option("--r", bl_r, "PCA components (pca-kmeans)")->capture_default_str();
  baseline->add_option("--restarts", bl_restarts, "k-means restarts")->capture_default_str();
  baseline->add_option("--labels-manifest", bl_manifest, "Label manifest CSV (id,style,genre)");
  baseline->add_option("--label-column", bl_columns, "Label column(s) to score: style, genre")->check(CLI::IsMember({"style", "genre"}));
  baseline->add_option("--out", bl_out, "Report JSON output")->required();
  add_common(baseline);

  // project
  FeatureOpts pj_points;
  ProjectOpts pj;
  std::string pj_assign, pj_manifest, pj_column = "style", pj_out;
  auto* project = app.add_subcommand("project", "Project points to a low-dimensional layout");
  project->add_option("--points", pj_points.path, "Points to project")->required();
  project->add_option("--format", pj_points.format, "Input format")->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));
  project->add_flag("--header", pj_points.header, "CSV input has a header row");
  pj.add(project, 1.0);
  project->add_option("--assignments", pj_assign, "Cluster assignments to stratify the sample on");
  project->add_option("--labels-manifest", pj_manifest, "Label manifest to stratify the sample on");
  project->add_option("--label-column", pj_column, "Manifest column used for stratification")->capture_default_str()->check(CLI::IsMember({"style", "genre"}));
  project->add_option("--out", pj_out, "Coordinates CSV output")->required();
  add_common(project);

  // plot
  std::string pl_xy, pl_assign, pl_out, pl_title;
  int pl_width = 800, pl_height = 800;
  double pl_radius = 3.0;
  auto* plot = app.add_subcommand("plot", "Render a 2-D scatter plot as SVG");
  plot->add_option("--xy", pl_xy, "Coordinates CSV with header (id,x,y)")->required();
  plot->add_option("--assignments", pl_assign, "Assignments CSV used for colors")->required();
  plot->add_option("--out", pl_out, "SVG output")->required();
  plot->add_option("--title", pl_title, "Plot title");
  plot->add_option("--width", pl_width, "Width in pixels")->capture_default_str();
  plot->add_option("--height", pl_height, "Height in pixels")->capture_default_str();
  plot->add_option("--radius", pl_radius, "Marker radius")->capture_default_str();
  add_common(plot);

  // gap
  std::string gp_maps, gp_out, gp_dtype = "f64";
  auto* gap = app.add_subcommand("gap", "Global average pooling of feature maps");
  gap->add_option("--maps", gp_maps, "Feature-map block (DELM)")->required();
  gap->add_option("--out", gp_out, "Pooled feature matrix output (DELF or .csv)")->required();
  gap->add_option("--dtype", gp_dtype, "Binary payload type")->capture_default_str()->check(CLI::IsMember({"f32", "f64"}));
  add_common(gap);

  // run
  FeatureOpts rn_feat;
  PretrainOpts rn_pt;
  ClusterOpts rn_cl;
  ProjectOpts rn_pj;
  std::string rn_dir, rn_manifest_labels, rn_column = "style";
  auto* runc = app.add_subcommand("run", "Full pipeline: pretrain, cluster, eval, project, plot");
  runc->add_option("--features", rn_feat.path, "Feature matrix (DELF or CSV)")->required();
  runc->add_option("--format", rn_feat.format, "Input format")->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));
  runc->add_flag("--header", rn_feat.header, "CSV input has a header row");
  rn_pt.add(runc);
  rn_cl.add(runc, false);
  rn_pj.add(runc, 0.1);
  runc->add_option("--labels-manifest", rn_manifest_labels, "Label manifest CSV (id,style,genre)");
  runc->add_option("--label-column", rn_column, "Manifest column scored in the report")->capture_default_str()->check(CLI::IsMember({"style", "genre"}));
  runc->add_option("--out-dir", rn_dir, "Output directory")->required();
  add_common(runc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Run run;
  run.app = app.get_subcommands().front();
  const auto start = std::chrono::steady_clock::now();
  int threads = 1;
  int code = kExitOk;
  std::string error;
  std::vector<std::string> produced;  // artifacts renamed to .partial on failure (run only)

  try {
    threads = resolve_threads(common.threads);
    const std::uint64_t seed = common.seed;

    if (run.app == pretrain) {
      run.manifest_path = common.manifest.empty() ? pt_out + ".manifest.json" : common.manifest;
      auto features = load_matrix(pt_feat, run, "features file");
      auto model = pretrain_stage(features.get(), pt, seed, pt_out + ".partial", run);
      check(delius_model_save(model.get(), pt_out.c_str()));
      run.output(pt_out);
      if (!pt_loss.empty()) write_loss_curve(model.get(), pt_loss, run);
    } else if (run.app == cluster) {
      run.manifest_path = common.manifest.empty() ? cl_assign + ".manifest.json" : common.manifest;
      auto features = load_matrix(cl_feat, run, "features file");
      require_file(cl_ckpt, "checkpoint");
      run.input(cl_ckpt);
      Handle<delius_model> model;
      check(delius_model_load(cl_ckpt.c_str(), Out(model)));
      auto c = cluster_stage(features.get(), model.get(), cl, seed);
      check(delius_clustering_write_assignments(c.get(), cl_assign.c_str()));
      run.output(cl_assign);
      if (!cl_out_ckpt.empty()) {
        Handle<delius_model> trained;
        check(delius_clustering_model(c.get(), Out(trained)));
        check(delius_model_save(trained.get(), cl_out_ckpt.c_str()));
        run.output(cl_out_ckpt);
      }
      if (!cl_history.empty()) {
        check(delius_clustering_write_history(c.get(), cl_history.c_str()));
        run.output(cl_history);
      }
      if (!cl_embedding.empty()) {
        Handle<delius_matrix> z;
        check(delius_clustering_embedding(c.get(), Out(z)));
        write_matrix(z.get(), cl_embedding, run);
      }
      run.extra["converged"] = delius_clustering_converged(c.get()) != 0;
      run.extra["iterations"] = delius_clustering_iterations(c.get());
    } else if (run.app == eval) {
      run.manifest_path = common.manifest.empty() ? ev_out + ".manifest.json" : common.manifest;
      auto points = load_matrix(ev_points, run, "points file");
      require_file(ev_assign, "assignments file");
      run.input(ev_assign);
      Handle<delius_labels> clusters;
      check(delius_labels_from_assignments(ev_assign.c_str(), points.get(), Out(clusters)));
      if (ev_columns.empty() && !ev_manifest.empty()) ev_columns = {"style"};
      Handle<delius_labels> style, genre;
      for (const auto& col : ev_columns) {
        if (ev_manifest.empty()) usage_error("--label-column needs --labels-manifest");
        (col == "style" ? style : genre) = load_truth(ev_manifest, col, points.get(), run);
      }
      Handle<delius_report> report;
      check(delius_evaluate(points.get(), clusters.get(), ev_tag.c_str(), style.get(), genre.get(), Out(report)));
      check(delius_report_write(report.get(), ev_out.c_str()));
      run.output(ev_out);
    } else if (run.app == baseline) {
      run.manifest_path = common.manifest.empty() ? bl_out + ".manifest.json" : common.manifest;
      auto features = load_matrix(bl_feat, run, "features file");
      const bool ae = bl_strategy == "ae-kmeans";
      Handle<delius_model> model;
      if (ae) {
        if (bl_ckpt.empty()) usage_error("ae-kmeans needs --ae-checkpoint");
        require_file(bl_ckpt, "checkpoint");
        run.input(bl_ckpt);
        check(delius_model_load(bl_ckpt.c_str(), Out(model)));
      }
      if (bl_columns.empty() && !bl_manifest.empty()) bl_columns = {"style"};
      Handle<delius_labels> style, genre;
      for (const auto& col : bl_columns) {
        if (bl_manifest.empty()) usage_error("--label-column needs --labels-manifest");
        (col == "style" ? style : genre) = load_truth(bl_manifest, col, features.get(), run);
      }
      Handle<delius_report> report;
      check(delius_baseline(features.get(), ae ? DELIUS_STRATEGY_AE_KMEANS : DELIUS_STRATEGY_PCA_KMEANS,
                            model.get(), bl_k, bl_r, bl_restarts, seed, style.get(), genre.get(),
                            Out(report), nullptr, nullptr));
      check(delius_report_write(report.get(), bl_out.c_str()));
      run.output(bl_out);
    } else if (run.app == project) {
      run.manifest_path = common.manifest.empty() ? pj_out + ".manifest.json" : common.manifest;
      auto points = load_matrix(pj_points, run, "points file");
      Handle<delius_labels> strata;
      if (!pj_assign.empty()) {
        require_file(pj_assign, "assignments file");
        run.input(pj_assign);
        check(delius_labels_from_assignments(pj_assign.c_str(), points.get(), Out(strata)));
      } else if (!pj_manifest.empty()) {
        strata = load_truth(pj_manifest, pj_column, points.get(), run);
      }
      project_stage(points.get(), strata.get(), pj, seed, false, pj_out, run);
    } else if (run.app == plot) {
      run.manifest_path = common.manifest.empty() ? pl_out + ".manifest.json" : common.manifest;
      auto xy = load_matrix(FeatureOpts{pl_xy, "csv", true}, run, "coordinates file");
      require_file(pl_assign, "assignments file");
      run.input(pl_assign);
      Handle<delius_labels> clusters;
      check(delius_labels_from_assignments(pl_assign.c_str(), xy.get(), Out(clusters)));
      check(delius_plot_scatter(xy.get(), clusters.get(), pl_title.c_str(), pl_width, pl_height,
                                pl_radius, pl_out.c_str()));
      run.output(pl_out);
    } else if (run.app == gap) {
      run.manifest_path = common.manifest.empty() ? gp_out + ".manifest.json" : common.manifest;
      require_file(gp_maps, "feature-map file");
      run.input(gp_maps);
      Handle<delius_matrix> pooled;
      check(delius_feature_maps_pool(gp_maps.c_str(), Out(pooled)));
      check(delius_matrix_write(pooled.get(), gp_out.c_str(), format_for(gp_out, "auto"),
                                gp_dtype == "f32" ? DELIUS_DTYPE_F32 : DELIUS_DTYPE_F64));
      run.output(gp_out);
    } else if (run.app == runc) {
      const fs::path dir(rn_dir);
      run.manifest_path = common.manifest.empty() ? (dir / "manifest.json").string() : common.manifest;
      if (rn_cl.k < 2) usage_error("--k must be at least 2 for joint clustering (got " + std::to_string(rn_cl.k) + ")");
      auto features = load_matrix(rn_feat, run, "features file");
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) usage_error("cannot create output directory " + rn_dir + ": " + ec.message());
      auto path = [&](const char* name) { return (dir / name).string(); };
      auto made = [&](const std::string& p) {
        run.output(p);
        produced.push_back(p);
      };
      rn_cl.batch = rn_pt.batch;
      rn_cl.lr = rn_pt.lr;
      rn_cl.beta1 = rn_pt.beta1;
      rn_cl.beta2 = rn_pt.beta2;
      rn_cl.eps = rn_pt.eps;

      stage_prefix = "pretrain";
      auto model = pretrain_stage(features.get(), rn_pt, seed, path("ae.delc.partial"), run);
      check(delius_model_save(model.get(), path("ae.delc").c_str()));
      made(path("ae.delc"));
      write_loss_curve(model.get(), path("loss.csv"), run);
      produced.push_back(path("loss.csv"));

      stage_prefix = "cluster";
      auto c = cluster_stage(features.get(), model.get(), rn_cl, seed);
      Handle<delius_model> trained;
      check(delius_clustering_model(c.get(), Out(trained)));
      check(delius_model_save(trained.get(), path("dec.delc").c_str()));
      made(path("dec.delc"));
      check(delius_clustering_write_assignments(c.get(), path("assignments.csv").c_str()));
      made(path("assignments.csv"));
      check(delius_clustering_write_history(c.get(), path("history.csv").c_str()));
      made(path("history.csv"));
      run.extra["converged"] = delius_clustering_converged(c.get()) != 0;
      run.extra["iterations"] = delius_clustering_iterations(c.get());

      stage_prefix = "eval";
      Handle<delius_matrix> z;
      check(delius_clustering_embedding(c.get(), Out(z)));
      Handle<delius_labels> hard;
      check(delius_clustering_labels(c.get(), Out(hard)));
      auto truth = load_truth(rn_manifest_labels, rn_column, features.get(), run);
      Handle<delius_report> report;
      check(delius_evaluate(z.get(), hard.get(), "embedded", rn_column == "style" ? truth.get() : nullptr,
                            rn_column == "genre" ? truth.get() : nullptr, Out(report)));
      check(delius_report_write(report.get(), path("report.json").c_str()));
      made(path("report.json"));

      stage_prefix = "project";
      auto [xy, xy_labels] = project_stage(z.get(), hard.get(), rn_pj, seed, true, path("xy.csv"), run);
      produced.push_back(path("xy.csv"));

      stage_prefix = "plot";
      check(delius_plot_scatter(xy.get(), xy_labels.get(), "", 800, 800, 3.0, path("plot.svg").c_str()));
      made(path("plot.svg"));
    }
  } catch (const Failure& f) {
    code = f.code;
    error = f.message;
  } catch (const std::exception& e) {
    code = kExitInternal;
    error = e.what();
  }

  if (code != kExitOk) {
    std::cerr << "delius " << run.app->get_name() << ": " << error << '\n';
    for (const auto& p : produced) {
      std::error_code ec;
      if (fs::exists(p)) fs::rename(p, p + ".partial", ec);
    }
    for (auto& p : run.outputs)
      if (!fs::exists(p) && fs::exists(p + ".partial")) p += ".partial";
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(run, common, threads, code, error, seconds);
  return code;
}
