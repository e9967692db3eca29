#ifndef LANCHESTER_NCW_H
#define LANCHESTER_NCW_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NcwStatus {
  NCW_STATUS_OK = 0,
  NCW_STATUS_NULL_POINTER = 1,
  NCW_STATUS_INVALID_UTF8 = 2,
  NCW_STATUS_INVALID_INPUT = 3,
  NCW_STATUS_NUMERICAL = 4,
  NCW_STATUS_BUFFER_TOO_SMALL = 5,
  NCW_STATUS_PANIC = 6,
} NcwStatus;

typedef enum NcwOutcome {
  NCW_OUTCOME_BLUE_WINS = 0,
  NCW_OUTCOME_BLUE_ANNIHILATED = 1,
  /**
   * Time horizon reached with both sides standing.
   */
  NCW_OUTCOME_STALEMATE = 2,
} NcwOutcome;

/**
 * Opaque campaign result handle.
 */
typedef struct NcwCampaign NcwCampaign;

/**
 * Opaque scenario handle.
 */
typedef struct NcwScenario NcwScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread. Never null.
 */
const char *ncw_last_error_message(void);

/**
 * Builds a scenario from per-agent parameter arrays of length `n_agents`.
 *
 * # Safety
 * Each array must hold `n_agents` values; `out` must be writable.
 */
enum NcwStatus ncw_scenario_new(double blue,
                                double red,
                                double r_red,
                                size_t n_agents,
                                const double *alpha_d,
                                const double *alpha_c,
                                const double *a0,
                                const double *r,
                                struct NcwScenario **out);

/**
 * Parses a scenario document (JSON schema of the command-line tool).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NcwStatus ncw_scenario_from_json(const char *json, struct NcwScenario **out);

/**
 * Loads a bundled scenario: `exp1`, `exp2`, `exp3` or `exp2-r2`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum NcwStatus ncw_scenario_preset(const char *name, struct NcwScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void ncw_scenario_free(struct NcwScenario *scenario);

/**
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_scenario_agent_count(const struct NcwScenario *scenario, size_t *out);

/**
 * Writes the `n_agents + 1` threatening rates (Red first) to `out`.
 *
 * # Safety
 * `out` must have room for `len` values.
 */
enum NcwStatus ncw_threat_rates(const struct NcwScenario *scenario, double *out, size_t len);

/**
 * Plans the campaign with the threat-rate rule.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_plan_campaign(const struct NcwScenario *scenario,
                                 double dt,
                                 double t_max,
                                 struct NcwCampaign **out);

/**
 * Runs a fixed policy. `allocations` holds `n_stages` rows of
 * `n_agents + 1` fractions, row-major; the last row is reused if the
 * battle outlasts the policy.
 *
 * # Safety
 * `allocations` must hold `n_stages * (n_agents + 1)` values.
 */
enum NcwStatus ncw_simulate_policy(const struct NcwScenario *scenario,
                                   const double *allocations,
                                   size_t n_stages,
                                   double dt,
                                   double t_max,
                                   struct NcwCampaign **out);

/**
 * # Safety
 * `campaign` must come from this library and not be used afterwards.
 */
void ncw_campaign_free(struct NcwCampaign *campaign);

/**
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_campaign_outcome(const struct NcwCampaign *campaign, enum NcwOutcome *out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_campaign_stage_count(const struct NcwCampaign *campaign, size_t *out);

/**
 * Target of stage `stage` (0-based): 0 for Red, `i` for agent `i`, -1 for
 * a mixed allocation.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_campaign_stage_target(const struct NcwCampaign *campaign,
                                         size_t stage,
                                         int32_t *out);

/**
 * Time, Blue and Red strengths at the end of the campaign. Any output
 * pointer may be null.
 *
 * # Safety
 * Non-null pointers must be writable.
 */
enum NcwStatus ncw_campaign_final_state(const struct NcwCampaign *campaign,
                                        double *t,
                                        double *blue,
                                        double *red);

/**
 * Time series as CSV text. Release with [`ncw_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_campaign_timeseries_csv(const struct NcwCampaign *campaign, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ncw_string_free(char *s);

/**
 * Square-law endgame once every agent is gone. Writes the survivors'
 * strengths; the loser's entry is 0 (both are 0 on mutual annihilation).
 *
 * # Safety
 * Output pointers must be writable.
 */
enum NcwStatus ncw_square_law_final(double blue,
                                    double red,
                                    double r_red,
                                    double delta,
                                    double *blue_out,
                                    double *red_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LANCHESTER_NCW_H */
