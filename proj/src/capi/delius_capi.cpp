// SPDX-License-Identifier: Apache-2.0
#include "delius/delius.h"

#include <cmath>
#include <fstream>
#include <new>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "delius/autoencoder.hpp"
#include "delius/baselines.hpp"
#include "delius/checkpoint.hpp"
#include "delius/dataio.hpp"
#include "delius/dec.hpp"
#include "delius/error.hpp"
#include "delius/metrics.hpp"
#include "delius/projection.hpp"
#include "delius/svg.hpp"

using namespace delius;

struct delius_matrix {
  dataio::FeatureMatrix m;
};

struct delius_labels {
  Labels values;
};

struct delius_model {
  nn::Checkpoint ckpt;
  std::vector<double> loss_curve;
};

struct delius_clustering {
  std::vector<std::string> ids;
  dec::DecResult result;
  Matrix embedding;
  std::uint64_t seed = 0;
};

struct delius_report {
  metrics::EvalReport report;
  std::string json;
};

namespace {

thread_local std::string last_error;

delius_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return DELIUS_ERR_CONFIG;
    case ErrorKind::Io: return DELIUS_ERR_IO;
    case ErrorKind::Format: return DELIUS_ERR_FORMAT;
    case ErrorKind::Data: return DELIUS_ERR_DATA;
    case ErrorKind::Shape: return DELIUS_ERR_SHAPE;
    case ErrorKind::Numeric: return DELIUS_ERR_NUMERIC;
    case ErrorKind::Degenerate: return DELIUS_ERR_DEGENERATE;
  }
  return DELIUS_ERR_INTERNAL;
}

template <typename F>
delius_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return DELIUS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DELIUS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DELIUS_ERR_INTERNAL;
  }
}

template <typename T>
void need(const T* p, const char* what) {
  if (p == nullptr) fail(ErrorKind::Config, std::string(what) + " must not be null");
}

nn::AdamConfig to_adam(const delius_adam_config& a) {
  nn::AdamConfig c;
  c.learning_rate = a.learning_rate;
  c.beta1 = a.beta1;
  c.beta2 = a.beta2;
  c.epsilon = a.epsilon;
  return c;
}

delius_adam_config from_adam(const nn::AdamConfig& c) {
  return {c.learning_rate, c.beta1, c.beta2, c.epsilon};
}

std::span<const int> optional_span(const delius_labels* l) {
  return l ? std::span<const int>(l->values) : std::span<const int>();
}

void check_rows(const delius_labels* l, const delius_matrix* m, const char* what) {
  if (l && l->values.size() != m->m.n())
    fail(ErrorKind::Shape, std::string(what) + " has " + std::to_string(l->values.size()) +
                               " entries for " + std::to_string(m->m.n()) + " rows");
}

delius_matrix* wrap(dataio::FeatureMatrix m) { return new delius_matrix{std::move(m)}; }

delius_matrix* wrap_like(Matrix values, const delius_matrix* source) {
  return wrap(dataio::make_features(std::move(values), source->m.ids));
}

}  // namespace

extern "C" {

const char* delius_version(void) { return DELIUS_VERSION; }

const char* delius_last_error(void) { return last_error.c_str(); }

const char* delius_status_name(delius_status status) {
  switch (status) {
    case DELIUS_OK: return "ok";
    case DELIUS_ERR_CONFIG: return "config";
    case DELIUS_ERR_IO: return "io";
    case DELIUS_ERR_FORMAT: return "format";
    case DELIUS_ERR_DATA: return "data";
    case DELIUS_ERR_SHAPE: return "shape";
    case DELIUS_ERR_NUMERIC: return "numeric";
    case DELIUS_ERR_DEGENERATE: return "degenerate";
    case DELIUS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

// ---- matrices ------------------------------------------------------------

delius_status delius_matrix_create(size_t rows, size_t cols, const double* row_major,
                                   delius_matrix** out) {
  return guarded([&] {
    need(out, "out");
    need(row_major, "data");
    Matrix values = Eigen::Map<const Matrix>(row_major, static_cast<Eigen::Index>(rows),
                                             static_cast<Eigen::Index>(cols));
    *out = wrap(dataio::make_features(std::move(values)));
  });
}

delius_status delius_matrix_read(const char* path, delius_format format, int csv_header,
                                 delius_matrix** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto fmt = format == DELIUS_FORMAT_CSV ? dataio::FileFormat::Csv : dataio::FileFormat::Binary;
    *out = wrap(dataio::read_features(path, fmt, dataio::CsvOptions{csv_header != 0}));
  });
}

delius_status delius_matrix_write(const delius_matrix* m, const char* path, delius_format format,
                                  delius_dtype dtype) {
  return guarded([&] {
    need(m, "matrix");
    need(path, "path");
    dataio::write_features(m->m, path,
                           format == DELIUS_FORMAT_CSV ? dataio::FileFormat::Csv : dataio::FileFormat::Binary,
                           dtype == DELIUS_DTYPE_F32 ? dataio::DType::F32 : dataio::DType::F64);
  });
}

delius_status delius_matrix_write_table(const delius_matrix* m, const char* path,
                                        const char* const* column_names) {
  return guarded([&] {
    need(m, "matrix");
    need(path, "path");
    need(column_names, "column names");
    std::vector<std::string> header{"id"};
    for (std::size_t c = 0; c < m->m.d(); ++c) {
      need(column_names[c], "column name");
      header.emplace_back(column_names[c]);
    }
    dataio::write_table(m->m, header, path);
  });
}

delius_status delius_feature_maps_pool(const char* path, delius_matrix** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(dataio::global_average_pool(dataio::read_feature_maps(path)));
  });
}

size_t delius_matrix_rows(const delius_matrix* m) { return m ? m->m.n() : 0; }
size_t delius_matrix_cols(const delius_matrix* m) { return m ? m->m.d() : 0; }
const double* delius_matrix_data(const delius_matrix* m) { return m ? m->m.values.data() : nullptr; }

const char* delius_matrix_id(const delius_matrix* m, size_t row) {
  return m && row < m->m.ids.size() ? m->m.ids[row].c_str() : nullptr;
}

delius_status delius_matrix_set_id(delius_matrix* m, size_t row, const char* id) {
  return guarded([&] {
    need(m, "matrix");
    need(id, "id");
    require(row < m->m.n(), ErrorKind::Config, "row " + std::to_string(row) + " out of range");
    m->m.ids[row] = id;
  });
}

void delius_matrix_free(delius_matrix* m) { delete m; }

// ---- labels --------------------------------------------------------------

delius_status delius_labels_create(size_t n, const int* values, delius_labels** out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) need(values, "values");
    *out = new delius_labels{Labels(values, values + n)};
  });
}

delius_status delius_labels_from_manifest(const char* path, const char* column,
                                          const delius_matrix* m, delius_labels** out) {
  return guarded([&] {
    need(path, "path");
    need(column, "column");
    need(m, "matrix");
    need(out, "out");
    auto col = dataio::align_labels(dataio::read_label_manifest(path), m->m, column);
    *out = new delius_labels{std::move(col.labels)};
  });
}

delius_status delius_labels_from_assignments(const char* path, const delius_matrix* m,
                                             delius_labels** out) {
  return guarded([&] {
    need(path, "path");
    need(m, "matrix");
    need(out, "out");
    const auto a = dataio::read_assignments(path);
    std::unordered_map<std::string, int> by_id;
    for (std::size_t i = 0; i < a.ids.size(); ++i) by_id.emplace(a.ids[i], a.hard[i]);
    Labels labels(m->m.n());
    for (std::size_t i = 0; i < m->m.n(); ++i) {
      const auto it = by_id.find(m->m.ids[i]);
      if (it == by_id.end())
        fail(ErrorKind::Data, "id '" + m->m.ids[i] + "' has no cluster assignment in " + path);
      labels[i] = it->second;
    }
    *out = new delius_labels{std::move(labels)};
  });
}

size_t delius_labels_count(const delius_labels* l) { return l ? l->values.size() : 0; }
const int* delius_labels_data(const delius_labels* l) { return l ? l->values.data() : nullptr; }
void delius_labels_free(delius_labels* l) { delete l; }

delius_status delius_stratified_sample(const delius_matrix* m, const delius_labels* strata,
                                       double fraction, uint64_t seed, const delius_labels* carry,
                                       delius_matrix** matrix_out, delius_labels** labels_out) {
  return guarded([&] {
    need(m, "matrix");
    need(strata, "strata");
    need(matrix_out, "matrix out");
    check_rows(carry, m, "carried labels");
    auto sample = dataio::stratified_sample(m->m, strata->values, fraction, seed);
    std::unique_ptr<delius_labels> picked;
    if (labels_out) {
      const Labels& src = carry ? carry->values : strata->values;
      picked = std::make_unique<delius_labels>();
      for (auto r : sample.rows) picked->values.push_back(src[r]);
    }
    *matrix_out = wrap(std::move(sample.matrix));
    if (labels_out) *labels_out = picked.release();
  });
}

// ---- autoencoder ---------------------------------------------------------

void delius_pretrain_config_default(delius_pretrain_config* cfg) {
  if (!cfg) return;
  static const size_t dims[] = {500, 500, 2000, 10};
  const ae::AutoencoderSpec spec;
  cfg->encoder_dims = dims;
  cfg->encoder_depth = 4;
  cfg->batch_size = spec.batch_size;
  cfg->epochs = spec.epochs;
  cfg->init_stddev = spec.init_stddev;
  cfg->adam = from_adam(spec.optimizer);
  cfg->seed = 0;
}

delius_status delius_pretrain(const delius_matrix* features, const delius_pretrain_config* cfg,
                              delius_epoch_callback on_epoch, void* user, delius_model** out) {
  return guarded([&] {
    need(features, "features");
    need(cfg, "config");
    need(out, "out");
    require(cfg->encoder_depth > 0, ErrorKind::Config, "encoder needs at least one layer");
    need(cfg->encoder_dims, "encoder dims");
    ae::AutoencoderSpec spec;
    spec.input_dim = features->m.d();
    spec.encoder_dims.assign(cfg->encoder_dims, cfg->encoder_dims + cfg->encoder_depth);
    spec.batch_size = cfg->batch_size;
    spec.epochs = cfg->epochs;
    spec.init_stddev = cfg->init_stddev;
    spec.optimizer = to_adam(cfg->adam);
    spec.validate();

    Rng rng(cfg->seed);
    auto model = ae::build(spec, rng);
    std::vector<double> curve;
    struct Stop {};
    ae::EpochCallback cb = [&](std::size_t epoch, double loss) {
      curve.push_back(loss);
      if (on_epoch && on_epoch(epoch, loss, user) != 0) throw Stop{};
    };
    std::size_t epochs_done = spec.epochs;
    try {
      ae::pretrain(model, features->m.values, spec, rng, cb);
    } catch (const Stop&) {
      epochs_done = curve.size();
    } catch (const ae::PretrainAborted& e) {
      *out = new delius_model{nn::Checkpoint{e.last_good().encoder, e.last_good().decoder, std::nullopt,
                                             cfg->seed, "pretrain", e.epoch()},
                              curve};
      throw;
    }
    *out = new delius_model{
        nn::Checkpoint{model.encoder, model.decoder, std::nullopt, cfg->seed, "pretrain", epochs_done},
        std::move(curve)};
  });
}

delius_status delius_model_load(const char* path, delius_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new delius_model{nn::load_checkpoint(path), {}};
  });
}

delius_status delius_model_save(const delius_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    nn::save_checkpoint(model->ckpt, path);
  });
}

size_t delius_model_input_dim(const delius_model* model) {
  return model ? model->ckpt.encoder.input_dim() : 0;
}
size_t delius_model_latent_dim(const delius_model* model) {
  return model ? model->ckpt.encoder.output_dim() : 0;
}
int delius_model_has_decoder(const delius_model* model) {
  return model && model->ckpt.decoder.has_value() ? 1 : 0;
}
size_t delius_model_clusters(const delius_model* model) {
  return model && model->ckpt.centroids ? static_cast<size_t>(model->ckpt.centroids->rows()) : 0;
}

const double* delius_model_loss_curve(const delius_model* model, size_t* length) {
  if (length) *length = model ? model->loss_curve.size() : 0;
  return model && !model->loss_curve.empty() ? model->loss_curve.data() : nullptr;
}

delius_status delius_model_encode(const delius_model* model, const delius_matrix* features,
                                  delius_matrix** out) {
  return guarded([&] {
    need(model, "model");
    need(features, "features");
    need(out, "out");
    *out = wrap_like(ae::encode(model->ckpt.encoder, features->m.values), features);
  });
}

void delius_model_free(delius_model* model) { delete model; }

// ---- joint clustering ----------------------------------------------------

void delius_cluster_config_default(delius_cluster_config* cfg) {
  if (!cfg) return;
  const dec::DecConfig d;
  cfg->k = 0;
  cfg->update_interval = d.update_interval;
  cfg->delta = d.delta;
  cfg->batch_size = d.batch_size;
  cfg->max_iterations = d.max_iterations;
  cfg->adam = from_adam(d.optimizer);
  cfg->kmeans_restarts = d.init.restarts;
  cfg->kmeans_max_iters = d.init.max_iters;
  cfg->kmeans_tol = d.init.tol;
  cfg->seed = 0;
}

delius_status delius_cluster(const delius_matrix* features, const delius_model* model,
                             const delius_cluster_config* cfg, delius_refresh_callback on_refresh,
                             void* user, delius_clustering** out) {
  return guarded([&] {
    need(features, "features");
    need(model, "model");
    need(cfg, "config");
    need(out, "out");
    dec::DecConfig d;
    d.k = cfg->k;
    d.update_interval = cfg->update_interval;
    d.delta = cfg->delta;
    d.batch_size = cfg->batch_size;
    d.max_iterations = cfg->max_iterations;
    d.optimizer = to_adam(cfg->adam);
    d.init = kmeans::KmeansConfig{cfg->k, cfg->kmeans_restarts, cfg->kmeans_max_iters, cfg->kmeans_tol};
    Rng rng(cfg->seed);
    dec::RefreshCallback cb;
    if (on_refresh)
      cb = [&](const dec::RefreshRecord& r) {
        const delius_refresh rec{r.refresh_index, r.iter, r.kl_full, r.kl_refreshed, r.changed_fraction};
        on_refresh(&rec, user);
      };
    auto result = dec::dec_fit(features->m.values, model->ckpt.encoder, d, rng, cb);
    auto c = std::make_unique<delius_clustering>();
    c->ids = features->m.ids;
    c->embedding = ae::encode(result.encoder, features->m.values);
    c->result = std::move(result);
    c->seed = cfg->seed;
    *out = c.release();
  });
}

size_t delius_clustering_k(const delius_clustering* c) {
  return c ? static_cast<size_t>(c->result.centroids.rows()) : 0;
}
int delius_clustering_converged(const delius_clustering* c) { return c && c->result.converged ? 1 : 0; }
size_t delius_clustering_iterations(const delius_clustering* c) { return c ? c->result.state.iter : 0; }
size_t delius_clustering_history_length(const delius_clustering* c) {
  return c ? c->result.history.size() : 0;
}

delius_status delius_clustering_history(const delius_clustering* c, size_t index, delius_refresh* out) {
  return guarded([&] {
    need(c, "clustering");
    need(out, "out");
    require(index < c->result.history.size(), ErrorKind::Config, "history index out of range");
    const auto& r = c->result.history[index];
    *out = delius_refresh{r.refresh_index, r.iter, r.kl_full, r.kl_refreshed, r.changed_fraction};
  });
}

delius_status delius_clustering_labels(const delius_clustering* c, delius_labels** out) {
  return guarded([&] {
    need(c, "clustering");
    need(out, "out");
    *out = new delius_labels{c->result.state.hard};
  });
}

delius_status delius_clustering_initial_labels(const delius_clustering* c, delius_labels** out) {
  return guarded([&] {
    need(c, "clustering");
    need(out, "out");
    *out = new delius_labels{c->result.initial_labels};
  });
}

delius_status delius_clustering_embedding(const delius_clustering* c, delius_matrix** out) {
  return guarded([&] {
    need(c, "clustering");
    need(out, "out");
    *out = wrap(dataio::make_features(c->embedding, c->ids));
  });
}

delius_status delius_clustering_model(const delius_clustering* c, delius_model** out) {
  return guarded([&] {
    need(c, "clustering");
    need(out, "out");
    *out = new delius_model{nn::Checkpoint{c->result.encoder, std::nullopt, c->result.centroids, c->seed,
                                           "cluster", c->result.state.iter},
                            {}};
  });
}

delius_status delius_clustering_write_assignments(const delius_clustering* c, const char* path) {
  return guarded([&] {
    need(c, "clustering");
    need(path, "path");
    dataio::ClusterAssignments a;
    a.ids = c->ids;
    a.hard = c->result.state.hard;
    a.q = c->result.state.q;
    a.k = static_cast<std::size_t>(c->result.centroids.rows());
    dataio::write_assignments(a, path);
  });
}

delius_status delius_clustering_write_history(const delius_clustering* c, const char* path) {
  return guarded([&] {
    need(c, "clustering");
    need(path, "path");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, std::string("cannot open ") + path + " for writing");
    out << "refresh_index,iter,kl_full,changed_fraction\n";
    for (const auto& r : c->result.history) {
      out << r.refresh_index << ',' << r.iter << ',' << dataio::format_double(r.kl_full) << ','
          << (std::isnan(r.changed_fraction) ? std::string() : dataio::format_double(r.changed_fraction))
          << '\n';
    }
    if (!out) fail(ErrorKind::Io, std::string("write failure on ") + path);
  });
}

void delius_clustering_free(delius_clustering* c) { delete c; }

// ---- evaluation ----------------------------------------------------------

delius_status delius_evaluate(const delius_matrix* points, const delius_labels* clusters,
                              const char* space_tag, const delius_labels* style,
                              const delius_labels* genre, delius_report** out) {
  return guarded([&] {
    need(points, "points");
    need(clusters, "clusters");
    need(out, "out");
    check_rows(clusters, points, "cluster labels");
    check_rows(style, points, "style labels");
    check_rows(genre, points, "genre labels");
    auto rep = metrics::evaluate(points->m.values, clusters->values, space_tag ? space_tag : "",
                                 metrics::LabelSet{optional_span(style), optional_span(genre)});
    auto json = metrics::to_json(rep);
    *out = new delius_report{std::move(rep), std::move(json)};
  });
}

double delius_report_silhouette(const delius_report* r) { return r ? r->report.sc : NAN; }
double delius_report_calinski_harabasz(const delius_report* r) { return r ? r->report.chi.value : NAN; }

int delius_report_acc_style(const delius_report* r, double* value) {
  if (!r || !r->report.acc_style) return 0;
  if (value) *value = *r->report.acc_style;
  return 1;
}

int delius_report_acc_genre(const delius_report* r, double* value) {
  if (!r || !r->report.acc_genre) return 0;
  if (value) *value = *r->report.acc_genre;
  return 1;
}

const char* delius_report_json(const delius_report* r) { return r ? r->json.c_str() : nullptr; }

delius_status delius_report_write(const delius_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    need(path, "path");
    metrics::write_report(r->report, path);
  });
}

void delius_report_free(delius_report* r) { delete r; }

// ---- baselines -----------------------------------------------------------

delius_status delius_baseline(const delius_matrix* features, delius_strategy strategy,
                              const delius_model* model, size_t k, size_t pca_dim, size_t restarts,
                              uint64_t seed, const delius_labels* style, const delius_labels* genre,
                              delius_report** report_out, delius_labels** labels_out,
                              delius_matrix** space_out) {
  return guarded([&] {
    need(features, "features");
    check_rows(style, features, "style labels");
    check_rows(genre, features, "genre labels");
    const metrics::LabelSet truth{optional_span(style), optional_span(genre)};
    const kmeans::KmeansConfig km{0, restarts, 300, 1e-6};
    baselines::BaselineRun run;
    switch (strategy) {
      case DELIUS_STRATEGY_PCA_KMEANS:
        run = baselines::run_pca_kmeans(features->m.values, k, pca_dim, seed, truth, km);
        break;
      case DELIUS_STRATEGY_AE_KMEANS:
        need(model, "model");
        run = baselines::run_ae_kmeans(features->m.values, model->ckpt.encoder, k, seed, truth, km);
        break;
      default:
        fail(ErrorKind::Config, "unknown baseline strategy");
    }
    std::unique_ptr<delius_report> rep;
    if (report_out) {
      auto json = metrics::to_json(run.report);
      rep.reset(new delius_report{run.report, std::move(json)});
    }
    std::unique_ptr<delius_labels> labels;
    if (labels_out) labels.reset(new delius_labels{run.kmeans.labels});
    std::unique_ptr<delius_matrix> space;
    if (space_out) space.reset(wrap_like(std::move(run.reduced), features));
    if (report_out) *report_out = rep.release();
    if (labels_out) *labels_out = labels.release();
    if (space_out) *space_out = space.release();
  });
}

// ---- projection and plotting ---------------------------------------------

void delius_tsne_config_default(delius_tsne_config* cfg) {
  if (!cfg) return;
  const projection::TsneConfig t;
  cfg->perplexity = t.perplexity;
  cfg->iterations = t.iterations;
  cfg->learning_rate = t.learning_rate;
  cfg->early_exaggeration = t.early_exaggeration;
  cfg->exaggeration_iters = t.exaggeration_iters;
  cfg->seed = t.seed;
}

delius_status delius_tsne(const delius_matrix* points, const delius_tsne_config* cfg,
                          delius_matrix** out) {
  return guarded([&] {
    need(points, "points");
    need(cfg, "config");
    need(out, "out");
    projection::TsneConfig t;
    t.perplexity = cfg->perplexity;
    t.iterations = cfg->iterations;
    t.learning_rate = cfg->learning_rate;
    t.early_exaggeration = cfg->early_exaggeration;
    t.exaggeration_iters = cfg->exaggeration_iters;
    t.momentum_switch_iter = cfg->exaggeration_iters;
    t.seed = cfg->seed;
    *out = wrap_like(projection::tsne_embed(points->m.values, t), points);
  });
}

delius_status delius_pca(const delius_matrix* points, size_t r, delius_matrix** out) {
  return guarded([&] {
    need(points, "points");
    need(out, "out");
    const auto model = projection::pca_fit(points->m.values, r);
    *out = wrap_like(projection::pca_transform(model, points->m.values), points);
  });
}

delius_status delius_plot_scatter(const delius_matrix* points, const delius_labels* clusters,
                                  const char* title, int width, int height, double marker_radius,
                                  const char* path) {
  return guarded([&] {
    need(points, "points");
    need(clusters, "clusters");
    need(path, "path");
    require(points->m.d() >= 2, ErrorKind::Shape, "scatter plot needs two coordinates per point");
    check_rows(clusters, points, "cluster labels");
    svg::ScatterSpec spec;
    spec.points = points->m.values.leftCols(2);
    spec.labels = clusters->values;
    spec.width = width;
    spec.height = height;
    spec.marker_radius = marker_radius;
    spec.title = title ? title : "";
    const auto doc = svg::render_scatter(spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, std::string("cannot open ") + path + " for writing");
    out << doc;
    if (!out) fail(ErrorKind::Io, std::string("write failure on ") + path);
  });
}

}  // extern "C"
