#ifndef MOLGEN_H
#define MOLGEN_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MolgenProperty {
  MOLGEN_MW = 0,
  MOLGEN_LOGP = 1,
  MOLGEN_HBD = 2,
  MOLGEN_HBA = 3,
  MOLGEN_TPSA = 4,
} MolgenProperty;

typedef enum MolgenStatus {
  MOLGEN_OK = 0,
  MOLGEN_NULL_POINTER = 1,
  MOLGEN_INVALID_UTF8 = 2,
  MOLGEN_PARSE_ERROR = 3,
  MOLGEN_DESCRIPTOR_ERROR = 4,
  MOLGEN_IO_ERROR = 5,
  MOLGEN_CHECKPOINT_ERROR = 6,
  MOLGEN_INVALID_ARGUMENT = 7,
  MOLGEN_QUOTA_NOT_MET = 8,
  MOLGEN_BUFFER_TOO_SMALL = 9,
  MOLGEN_INDEX_OUT_OF_RANGE = 10,
  MOLGEN_INTERNAL_ERROR = 11,
} MolgenStatus;

/**
 * A loaded checkpoint.
 */
typedef struct MolgenModel MolgenModel;

/**
 * The outcome of a generation campaign.
 */
typedef struct MolgenReport MolgenReport;

typedef struct MolgenProperties {
  double mw;
  double logp;
  uint32_t hbd;
  uint32_t hba;
  double tpsa;
} MolgenProperties;

typedef struct MolgenRange {
  double min;
  double max;
  double mean;
} MolgenRange;

/**
 * Campaign settings; start from [`molgen_campaign_defaults`].
 */
typedef struct MolgenCampaignOptions {
  uint32_t quota;
  uint64_t attempt_cap;
  uint64_t seed;
  uint32_t workers;
  uint32_t writeouts_per_attempt;
  double temperature;
  /**
   * Neighbourhood noise scale; used only with a seed molecule.
   */
  double sigma;
} MolgenCampaignOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, plus one for
 * the NUL.
 */
size_t molgen_last_error_length(void);

/**
 * Copies the last error message of this thread into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes; `needed` may be null.
 */
enum MolgenStatus molgen_last_error_message(char *buf, size_t len, size_t *needed);

/**
 * 1 if `smiles` parses into a valid molecule, 0 if not, -1 on a bad
 * argument.
 *
 * # Safety
 * `smiles` must be a NUL-terminated string.
 */
int32_t molgen_is_valid(const char *smiles);

/**
 * Canonical SMILES of `smiles`.
 *
 * # Safety
 * `smiles` must be a NUL-terminated string and `buf` must point to `len`
 * writable bytes; `needed` may be null.
 */
enum MolgenStatus molgen_canonicalize(const char *smiles, char *buf, size_t len, size_t *needed);

/**
 * The five descriptors of `smiles`.
 *
 * # Safety
 * `smiles` must be a NUL-terminated string and `out` writable.
 */
enum MolgenStatus molgen_properties(const char *smiles, struct MolgenProperties *out);

/**
 * Loads a checkpoint into `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum MolgenStatus molgen_model_load(const char *path, struct MolgenModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from [`molgen_model_load`] and not be used afterwards.
 */
void molgen_model_free(struct MolgenModel *model);

/**
 * Latent dimension of a model, 0 for null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t molgen_model_latent_dim(const struct MolgenModel *model);

/**
 * Training-set minimum, maximum and mean of one property.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum MolgenStatus molgen_model_stats(const struct MolgenModel *model,
                                     enum MolgenProperty property,
                                     struct MolgenRange *out);

/**
 * The training maximum of `property` scaled by 1.1, or NaN for null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
double molgen_beyond_range_value(const struct MolgenModel *model, enum MolgenProperty property);

struct MolgenCampaignOptions molgen_campaign_defaults(void);

/**
 * Runs a campaign towards `target`. Latents are drawn from the prior, or
 * around `seed_smiles` when it is not null. A report is returned in `*out`
 * both on success and when the attempt cap ends the campaign early (status
 * `MOLGEN_QUOTA_NOT_MET`).
 *
 * # Safety
 * `model` must be a live handle, `target` and `options` readable,
 * `seed_smiles` null or NUL-terminated, and `out` writable.
 */
enum MolgenStatus molgen_generate(const struct MolgenModel *model,
                                  const struct MolgenProperties *target,
                                  const char *seed_smiles,
                                  const struct MolgenCampaignOptions *options,
                                  struct MolgenReport **out);

/**
 * Releases a report; null is ignored.
 *
 * # Safety
 * `report` must come from [`molgen_generate`] and not be used afterwards.
 */
void molgen_report_free(struct MolgenReport *report);

/**
 * Campaign counts. Any output pointer may be null.
 *
 * # Safety
 * `report` must be a live handle.
 */
enum MolgenStatus molgen_report_counts(const struct MolgenReport *report,
                                       uint64_t *attempts,
                                       uint64_t *writeouts,
                                       uint64_t *valid,
                                       uint64_t *unique_valid,
                                       uint64_t *successes);

/**
 * 1 if the campaign reached its quota, 0 if not or for null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
int32_t molgen_report_quota_met(const struct MolgenReport *report);

/**
 * Canonical SMILES and properties of the `index`-th success.
 *
 * # Safety
 * `report` must be a live handle, `buf` must point to `len` writable bytes,
 * and `needed` and `props` may be null.
 */
enum MolgenStatus molgen_report_success(const struct MolgenReport *report,
                                        size_t index,
                                        char *buf,
                                        size_t len,
                                        size_t *needed,
                                        struct MolgenProperties *props);

/**
 * Writes every distinct valid molecule of the campaign as CSV.
 *
 * # Safety
 * `report` must be a live handle and `path` NUL-terminated.
 */
enum MolgenStatus molgen_report_write_csv(const struct MolgenReport *report, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOLGEN_H */
