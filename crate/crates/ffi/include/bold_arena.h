#ifndef BOLD_ARENA_H
#define BOLD_ARENA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum BoldStatus {
  BOLD_STATUS_OK = 0,
  BOLD_STATUS_NULL_POINTER = 1,
  BOLD_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad JSON or a config that fails validation.
   */
  BOLD_STATUS_MALFORMED_CONFIG = 3,
  BOLD_STATUS_INVALID_ARGUMENT = 4,
  /**
   * A panic was caught at the boundary.
   */
  BOLD_STATUS_INTERNAL = 5,
} BoldStatus;

/**
 * Winner of a finished run.
 */
typedef enum BoldWinner {
  BOLD_WINNER_UNDECIDED = 0,
  BOLD_WINNER_HONEST = 1,
  BOLD_WINNER_ADVERSARY = 2,
  BOLD_WINNER_NO_WINNER = 3,
} BoldWinner;

/**
 * A finished run.
 */
typedef struct BoldReport BoldReport;

/**
 * A parsed, validated scenario.
 */
typedef struct BoldScenario BoldScenario;

/**
 * Headline numbers of a report.
 */
typedef struct BoldSummary {
  uint32_t winner;
  bool liveness_ok;
  /**
   * Zero when no root was confirmed.
   */
  uint64_t winning_round;
  uint64_t round_bound;
  uint64_t rounds_run;
  uint64_t censored_rounds;
  uint64_t violations;
  uint64_t g_h;
  uint64_t s_h;
  uint64_t g_a;
  uint64_t s_a;
  uint64_t ratio_num;
  /**
   * Zero means the ratio is unbounded.
   */
  uint64_t ratio_den;
  bool reimbursed;
} BoldSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *bold_last_error(void);

/**
 * Library version as a static string.
 */
const char *bold_version(void);

/**
 * Parses and validates a scenario from NUL-terminated JSON.
 *
 * # Safety
 * `json` must be a valid C string and `out` a writable pointer.
 */
enum BoldStatus bold_scenario_from_json(const char *json, struct BoldScenario **out);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `s` must come from [`bold_scenario_from_json`] and not be used again.
 */
void bold_scenario_free(struct BoldScenario *s);

/**
 * Replaces the scenario's seed.
 *
 * # Safety
 * `s` must be a live scenario handle.
 */
enum BoldStatus bold_scenario_set_seed(struct BoldScenario *s, uint64_t seed);

/**
 * Round by which the honest root must win, with the update phase.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` writable.
 */
enum BoldStatus bold_scenario_round_bound(const struct BoldScenario *s, uint64_t *out);

/**
 * Checks the scenario's gas and stake schedule against ratio target `rho`.
 *
 * # Safety
 * `s` must be a live scenario handle and `pass` writable.
 */
enum BoldStatus bold_scenario_validate_schedule(const struct BoldScenario *s,
                                                uint64_t rho,
                                                bool *pass);

/**
 * Round bound for raw parameters: `ks` holds `len` cumulative level
 * exponents.
 *
 * # Safety
 * `ks` must point at `len` readable values and `out` be writable.
 */
enum BoldStatus bold_round_bound(const uint32_t *ks,
                                 size_t len,
                                 uint64_t threshold,
                                 uint64_t delta,
                                 uint64_t c_max,
                                 bool with_updates,
                                 uint64_t *out);

/**
 * Plays the scenario until a winner or the round cap.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` writable.
 */
enum BoldStatus bold_run(const struct BoldScenario *s, struct BoldReport **out);

/**
 * Plays exactly the static bound with the static honest strategy.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` writable.
 */
enum BoldStatus bold_run_static(const struct BoldScenario *s, struct BoldReport **out);

/**
 * Fills `out` with the report's headline numbers.
 *
 * # Safety
 * `r` must be a live report handle and `out` writable.
 */
enum BoldStatus bold_report_summary(const struct BoldReport *r, struct BoldSummary *out);

/**
 * The full report as JSON, owned by the handle.
 *
 * # Safety
 * `r` must be a live report handle. The string dies with it.
 */
const char *bold_report_json(const struct BoldReport *r);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `r` must come from [`bold_run`] or [`bold_run_static`] and not be used again.
 */
void bold_report_free(struct BoldReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOLD_ARENA_H */
