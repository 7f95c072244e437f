/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the DELIUS deep embedded clustering library.
 *
 * Every function returns a delius_status. On failure the message of the most
 * recent error on the calling thread is available from delius_last_error().
 * Handles returned through out-parameters are owned by the caller and must be
 * released with the matching *_free function. Output pointers are left
 * untouched on failure unless documented otherwise.
 */
#ifndef DELIUS_DELIUS_H
#define DELIUS_DELIUS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(DELIUS_BUILDING_LIBRARY)
#define DELIUS_API __declspec(dllexport)
#else
#define DELIUS_API __declspec(dllimport)
#endif
#else
#define DELIUS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum delius_status {
  DELIUS_OK = 0,
  DELIUS_ERR_CONFIG = 1,     /* invalid parameters */
  DELIUS_ERR_IO = 2,         /* file could not be opened, read or written */
  DELIUS_ERR_FORMAT = 3,     /* malformed file content */
  DELIUS_ERR_DATA = 4,       /* unusable values: NaN, missing labels, ... */
  DELIUS_ERR_SHAPE = 5,      /* dimension mismatch */
  DELIUS_ERR_NUMERIC = 6,    /* non-finite loss or gradient */
  DELIUS_ERR_DEGENERATE = 7, /* collapsed centroids or clusters */
  DELIUS_ERR_INTERNAL = 8    /* unexpected failure */
} delius_status;

typedef enum delius_format { DELIUS_FORMAT_BINARY = 0, DELIUS_FORMAT_CSV = 1 } delius_format;
typedef enum delius_dtype { DELIUS_DTYPE_F32 = 0, DELIUS_DTYPE_F64 = 1 } delius_dtype;
typedef enum delius_strategy {
  DELIUS_STRATEGY_PCA_KMEANS = 0,
  DELIUS_STRATEGY_AE_KMEANS = 1
} delius_strategy;

typedef struct delius_matrix delius_matrix;         /* n x d values with row ids */
typedef struct delius_labels delius_labels;         /* n integer labels, -1 = unlabeled */
typedef struct delius_model delius_model;           /* encoder, optional decoder and centroids */
typedef struct delius_clustering delius_clustering; /* result of joint training */
typedef struct delius_report delius_report;         /* clustering evaluation */

DELIUS_API const char* delius_version(void);
DELIUS_API const char* delius_last_error(void);
DELIUS_API const char* delius_status_name(delius_status status);

/* ---- matrices ---------------------------------------------------------- */

DELIUS_API delius_status delius_matrix_create(size_t rows, size_t cols, const double* row_major,
                                              delius_matrix** out);
DELIUS_API delius_status delius_matrix_read(const char* path, delius_format format,
                                            int csv_header, delius_matrix** out);
DELIUS_API delius_status delius_matrix_write(const delius_matrix* m, const char* path,
                                             delius_format format, delius_dtype dtype);
/* Writes `id,<name_1>,...,<name_d>` with one row per sample. */
DELIUS_API delius_status delius_matrix_write_table(const delius_matrix* m, const char* path,
                                                   const char* const* column_names);
/* Reads a DELM feature-map block and averages each channel over its cells. */
DELIUS_API delius_status delius_feature_maps_pool(const char* path, delius_matrix** out);
DELIUS_API size_t delius_matrix_rows(const delius_matrix* m);
DELIUS_API size_t delius_matrix_cols(const delius_matrix* m);
DELIUS_API const double* delius_matrix_data(const delius_matrix* m);
DELIUS_API const char* delius_matrix_id(const delius_matrix* m, size_t row);
DELIUS_API delius_status delius_matrix_set_id(delius_matrix* m, size_t row, const char* id);
DELIUS_API void delius_matrix_free(delius_matrix* m);

/* ---- labels ------------------------------------------------------------ */

DELIUS_API delius_status delius_labels_create(size_t n, const int* values, delius_labels** out);
/* Reads column "style" or "genre" of a label manifest, aligned to m's ids. */
DELIUS_API delius_status delius_labels_from_manifest(const char* path, const char* column,
                                                     const delius_matrix* m,
                                                     delius_labels** out);
/* Reads the cluster column of an assignments CSV, aligned to m's ids. */
DELIUS_API delius_status delius_labels_from_assignments(const char* path, const delius_matrix* m,
                                                        delius_labels** out);
DELIUS_API size_t delius_labels_count(const delius_labels* l);
DELIUS_API const int* delius_labels_data(const delius_labels* l);
DELIUS_API void delius_labels_free(delius_labels* l);

/* Stratified subsample: keeps about fraction of every label class. Writes the
   selected rows of m and, when `labels_out` is non-null, the matching rows of
   `carry` (or of `strata` when carry is null). */
DELIUS_API delius_status delius_stratified_sample(const delius_matrix* m,
                                                  const delius_labels* strata, double fraction,
                                                  uint64_t seed, const delius_labels* carry,
                                                  delius_matrix** matrix_out,
                                                  delius_labels** labels_out);

/* ---- autoencoder ------------------------------------------------------- */

typedef struct delius_adam_config {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
} delius_adam_config;

typedef struct delius_pretrain_config {
  const size_t* encoder_dims; /* widths after the input layer; last entry is the latent size */
  size_t encoder_depth;
  size_t batch_size;
  size_t epochs;
  double init_stddev;
  delius_adam_config adam;
  uint64_t seed;
} delius_pretrain_config;

/* Called after every epoch; return non-zero to stop early. */
typedef int (*delius_epoch_callback)(size_t epoch, double loss, void* user);

/* 1024-500-500-2000-10, batch 256, 200 epochs, Adam(1e-3, 0.9, 0.999, 1e-8), N(0, 0.01^2). */
DELIUS_API void delius_pretrain_config_default(delius_pretrain_config* cfg);

/* On DELIUS_ERR_NUMERIC, *out receives the last model whose parameters were
   finite, so the caller can still inspect or save it. */
DELIUS_API delius_status delius_pretrain(const delius_matrix* features,
                                         const delius_pretrain_config* cfg,
                                         delius_epoch_callback on_epoch, void* user,
                                         delius_model** out);

DELIUS_API delius_status delius_model_load(const char* path, delius_model** out);
DELIUS_API delius_status delius_model_save(const delius_model* model, const char* path);
DELIUS_API size_t delius_model_input_dim(const delius_model* model);
DELIUS_API size_t delius_model_latent_dim(const delius_model* model);
DELIUS_API int delius_model_has_decoder(const delius_model* model);
/* Number of centroids, 0 for a pretrained-only model. */
DELIUS_API size_t delius_model_clusters(const delius_model* model);
/* Per-epoch pretraining loss; empty for models loaded from disk. */
DELIUS_API const double* delius_model_loss_curve(const delius_model* model, size_t* length);
DELIUS_API delius_status delius_model_encode(const delius_model* model,
                                             const delius_matrix* features, delius_matrix** out);
DELIUS_API void delius_model_free(delius_model* model);

/* ---- joint clustering -------------------------------------------------- */

typedef struct delius_cluster_config {
  size_t k;
  size_t update_interval;
  double delta;
  size_t batch_size;
  size_t max_iterations;
  delius_adam_config adam;
  size_t kmeans_restarts;
  size_t kmeans_max_iters;
  double kmeans_tol;
  uint64_t seed;
} delius_cluster_config;

typedef struct delius_refresh {
  size_t refresh_index;
  size_t iter;
  double kl_full;          /* KL of the new Q against the previous target */
  double kl_refreshed;     /* KL of the new Q against the refreshed target */
  double changed_fraction; /* NaN at the first refresh */
} delius_refresh;

typedef void (*delius_refresh_callback)(const delius_refresh* record, void* user);

/* t = 140, delta = 0.001, batch 256, 20000 iterations, Adam defaults, 20 restarts. */
DELIUS_API void delius_cluster_config_default(delius_cluster_config* cfg);

DELIUS_API delius_status delius_cluster(const delius_matrix* features, const delius_model* model,
                                        const delius_cluster_config* cfg,
                                        delius_refresh_callback on_refresh, void* user,
                                        delius_clustering** out);
DELIUS_API size_t delius_clustering_k(const delius_clustering* c);
DELIUS_API int delius_clustering_converged(const delius_clustering* c);
DELIUS_API size_t delius_clustering_iterations(const delius_clustering* c);
DELIUS_API size_t delius_clustering_history_length(const delius_clustering* c);
DELIUS_API delius_status delius_clustering_history(const delius_clustering* c, size_t index,
                                                   delius_refresh* out);
DELIUS_API delius_status delius_clustering_labels(const delius_clustering* c,
                                                  delius_labels** out);
DELIUS_API delius_status delius_clustering_initial_labels(const delius_clustering* c,
                                                          delius_labels** out);
/* Embedding of the training features under the final encoder. */
DELIUS_API delius_status delius_clustering_embedding(const delius_clustering* c,
                                                     delius_matrix** out);
/* Trained encoder plus centroids, without decoder. */
DELIUS_API delius_status delius_clustering_model(const delius_clustering* c, delius_model** out);
DELIUS_API delius_status delius_clustering_write_assignments(const delius_clustering* c,
                                                             const char* path);
/* CSV `refresh_index,iter,kl_full,changed_fraction`. */
DELIUS_API delius_status delius_clustering_write_history(const delius_clustering* c,
                                                         const char* path);
DELIUS_API void delius_clustering_free(delius_clustering* c);

/* ---- evaluation -------------------------------------------------------- */

/* style and genre may be null. */
DELIUS_API delius_status delius_evaluate(const delius_matrix* points,
                                         const delius_labels* clusters, const char* space_tag,
                                         const delius_labels* style, const delius_labels* genre,
                                         delius_report** out);
DELIUS_API double delius_report_silhouette(const delius_report* r);
DELIUS_API double delius_report_calinski_harabasz(const delius_report* r);
/* Returns 0 and leaves *value alone when the accuracy was not computed. */
DELIUS_API int delius_report_acc_style(const delius_report* r, double* value);
DELIUS_API int delius_report_acc_genre(const delius_report* r, double* value);
/* JSON text, valid until the report is freed. */
DELIUS_API const char* delius_report_json(const delius_report* r);
DELIUS_API delius_status delius_report_write(const delius_report* r, const char* path);
DELIUS_API void delius_report_free(delius_report* r);

/* ---- baselines --------------------------------------------------------- */

/* `model` is required for AE+k-means and ignored otherwise; `pca_dim` is
   ignored for AE+k-means. Any of the out-parameters may be null. */
DELIUS_API delius_status delius_baseline(const delius_matrix* features, delius_strategy strategy,
                                         const delius_model* model, size_t k, size_t pca_dim,
                                         size_t restarts, uint64_t seed,
                                         const delius_labels* style, const delius_labels* genre,
                                         delius_report** report_out, delius_labels** labels_out,
                                         delius_matrix** space_out);

/* ---- projection and plotting ------------------------------------------- */

typedef struct delius_tsne_config {
  double perplexity;
  size_t iterations;
  double learning_rate;
  double early_exaggeration;
  size_t exaggeration_iters;
  uint64_t seed;
} delius_tsne_config;

/* Perplexity 30, 1000 iterations, learning rate 200, exaggeration 12 for 250. */
DELIUS_API void delius_tsne_config_default(delius_tsne_config* cfg);
DELIUS_API delius_status delius_tsne(const delius_matrix* points, const delius_tsne_config* cfg,
                                     delius_matrix** out);
DELIUS_API delius_status delius_pca(const delius_matrix* points, size_t r, delius_matrix** out);

/* Writes a standalone SVG scatter of the first two columns of `points`. */
DELIUS_API delius_status delius_plot_scatter(const delius_matrix* points,
                                             const delius_labels* clusters, const char* title,
                                             int width, int height, double marker_radius,
                                             const char* path);

#ifdef __cplusplus
}
#endif

#endif /* DELIUS_DELIUS_H */
