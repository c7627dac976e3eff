#ifndef TCRISK_H
#define TCRISK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Report kind, mirroring the CLI subcommands that take a scenario.
 */
typedef enum {
  TC_COMMAND_SOLVE = 0,
  TC_COMMAND_AUDIT = 1,
  TC_COMMAND_ORACLE = 2,
  TC_COMMAND_ROLLOUT = 3,
} TcCommand;

/*
 Report rendering.
 */
typedef enum {
  TC_FORMAT_TEXT = 0,
  TC_FORMAT_JSON = 1,
} TcFormat;

/*
 Result code of every fallible call. Values 2 and 3 match the CLI exit codes.
 */
typedef enum {
  TC_STATUS_OK = 0,
  TC_STATUS_FAILED = 1,
  TC_STATUS_INVALID_INPUT = 2,
  TC_STATUS_INFEASIBLE = 3,
  TC_STATUS_NULL_POINTER = 4,
  TC_STATUS_OUT_OF_RANGE = 5,
  TC_STATUS_PANIC = 6,
} TcStatus;

/*
 Parsed, validated scenario.
 */
typedef struct TcScenario TcScenario;

/*
 Solved value tables together with the feedback policy.
 */
typedef struct TcSolution TcSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failing call on this thread, or NULL. The pointer stays
 valid until the next failing call on this thread.
 */
const char *tc_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *tc_version(void);

/*
 Release a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void tc_string_free(char *s);

/*
 Parse a scenario document.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
TcStatus tc_scenario_from_json(const char *json, TcScenario **out);

/*
 Load a scenario file.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
TcStatus tc_scenario_load(const char *path, TcScenario **out);

/*
 Release a scenario. NULL is ignored.

 # Safety
 `sc` must come from `tc_scenario_*` and not have been freed.
 */
void tc_scenario_free(TcScenario *sc);

/*
 Default threshold stored in the scenario.

 # Safety
 `sc` must be a live scenario handle.
 */
double tc_scenario_r0(const TcScenario *sc);

/*
 Number of decision stages.

 # Safety
 `sc` must be a live scenario handle.
 */
uintptr_t tc_scenario_horizon(const TcScenario *sc);

/*
 Number of states.

 # Safety
 `sc` must be a live scenario handle.
 */
uintptr_t tc_scenario_num_states(const TcScenario *sc);

/*
 Index of the state with the given label.

 # Safety
 `sc` must be a live scenario handle, `label` a NUL-terminated string and
 `out` a valid pointer.
 */
TcStatus tc_scenario_state_index(const TcScenario *sc, const char *label, uintptr_t *out);

/*
 Solve from the initial state at threshold `r0`. Pass NaN to use the
 scenario's own threshold.

 # Safety
 `sc` must be a live scenario handle and `out` a valid pointer.
 */
TcStatus tc_solve(const TcScenario *sc, double r0, TcSolution **out);

/*
 Release a solution. NULL is ignored.

 # Safety
 `sol` must come from `tc_solve` and not have been freed.
 */
void tc_solution_free(TcSolution *sol);

/*
 Optimal expected objective cost at the solved threshold.

 # Safety
 `sol` must be a live solution handle.
 */
double tc_solution_value(const TcSolution *sol);

/*
 Smallest feasible threshold at `(stage, state)`. NaN when out of range.

 # Safety
 `sol` must be a live solution handle.
 */
double tc_solution_min_threshold(const TcSolution *sol, uintptr_t stage, uintptr_t state);

/*
 Value of the threshold-indexed value function at `(stage, state, r)`;
 +infinity when `r` is infeasible.

 # Safety
 `sol` must be a live solution handle and `out` a valid pointer.
 */
TcStatus tc_solution_value_at(const TcSolution *sol,
                              uintptr_t stage,
                              uintptr_t state,
                              double r,
                              double *out);

/*
 Action label chosen at `(stage, state, r)`. When `successor_thresholds` is
 not NULL it receives the threshold handed to each state index (NaN for
 states that cannot follow); it must hold `tc_scenario_num_states` entries.

 # Safety
 `sol` must be a live solution handle, `action` a valid pointer and
 `successor_thresholds` NULL or an array of the stated length.
 */
TcStatus tc_solution_decide(const TcSolution *sol,
                            uintptr_t stage,
                            uintptr_t state,
                            double r,
                            char **action,
                            double *successor_thresholds);

/*
 Build a full report, as the CLI would print it. `r0` NaN keeps the
 scenario's threshold; `n` and `seed` only affect rollouts.

 # Safety
 `sc` must be a live scenario handle and `out` a valid pointer.
 */
TcStatus tc_report(const TcScenario *sc,
                   TcCommand command,
                   TcFormat format,
                   double r0,
                   bool oracle,
                   uintptr_t n,
                   uint64_t seed,
                   char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TCRISK_H */
