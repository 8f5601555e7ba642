/* SPDX-License-Identifier: Apache-2.0
 *
 * rtopf — safe deep-RL toolkit for real-time AC optimal power flow.
 *
 * C interface of the shared library. All functions return rtopf_status;
 * outputs go through caller-allocated buffers sized from the count getters.
 * On failure, rtopf_last_error() returns a thread-local message.
 */
#ifndef RTOPF_H
#define RTOPF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rtopf_status {
  RTOPF_OK = 0,
  RTOPF_ERR_CONFIG = 2,  /* bad config, schema violation, hash mismatch */
  RTOPF_ERR_SOLVER = 3,  /* numerical failure */
  RTOPF_ERR_GATE = 4,    /* evaluation gate threshold not met */
  RTOPF_ERR_USAGE = 5,   /* API misuse / precondition violation */
  RTOPF_ERR_IO = 6       /* missing or unwritable file */
} rtopf_status;

typedef struct rtopf_network rtopf_network;
typedef struct rtopf_env rtopf_env;

const char* rtopf_version(void);
const char* rtopf_last_error(void);

/* ---- network ---------------------------------------------------------- */

rtopf_status rtopf_network_load(const char* case_path, rtopf_network** out);
void rtopf_network_free(rtopf_network* net);

int rtopf_network_bus_count(const rtopf_network* net);
int rtopf_network_branch_count(const rtopf_network* net);
int rtopf_network_gen_count(const rtopf_network* net);
/* state and action dimensions of the decision problem on this network */
rtopf_status rtopf_network_dims(const rtopf_network* net, int* state_dim, int* action_dim);

/* ---- power flow -------------------------------------------------------- */

/* pg_mw/vg: one entry per generator (slack pg ignored). pd_mw/qd_mvar: one
 * entry per bus, or NULL for the base-case demands. Output buffers may be
 * NULL when the caller does not need them: vm/va per bus, qg/pg_solved per
 * generator, violations as [c_pg, c_qg, c_vg, c_flow]. */
rtopf_status rtopf_solve_powerflow(const rtopf_network* net, const double* pg_mw, const double* vg,
                                   const double* pd_mw, const double* qd_mvar, double* vm,
                                   double* va, double* qg_mvar, double* pg_solved_mw,
                                   double* violations4, int* converged, int* iterations);

/* ---- optimal power flow ------------------------------------------------ */

/* prev_pg_mw: NULL or one entry per generator (activates the ramp box).
 * Outputs per generator; any output pointer may be NULL. */
rtopf_status rtopf_solve_opf(const rtopf_network* net, const double* pd_mw, const double* qd_mvar,
                             const double* prev_pg_mw, double* pg_mw, double* vg, double* qg_mvar,
                             double* objective, int* feasible, int* iterations,
                             double* kkt_residual);

/* ---- contingency hook --------------------------------------------------- */

/* Evaluates the expanded cost vector: 4 base-case components followed by 4
 * per contingency. outage_branches: concatenated branch indices;
 * outage_lens[i]: number of branches in contingency i. costs must hold
 * 4*(n_outages+1) doubles. */
rtopf_status rtopf_expanded_cost(const rtopf_network* net, const int* outage_branches,
                                 const int* outage_lens, int n_outages, const double* pg_mw,
                                 const double* vg, const double* pd_mw, const double* qd_mvar,
                                 double cost_ceiling, double* costs);

int rtopf_find_branch(const rtopf_network* net, int from_bus_id, int to_bus_id);

/* ---- environment -------------------------------------------------------- */

/* Builds the episode environment from a case file, an expert trajectory file
 * and an env-config JSON string ("{}" for defaults). */
rtopf_status rtopf_env_create(const char* case_path, const char* trajectory_path,
                              const char* env_config_json, uint64_t seed, rtopf_env** out);
void rtopf_env_free(rtopf_env* env);

rtopf_status rtopf_env_dims(const rtopf_env* env, int* state_dim, int* action_dim);
/* step_index >= 0 pins a trajectory step; -1 samples one with the env seed */
rtopf_status rtopf_env_reset(rtopf_env* env, int step_index, double* state_normalized);
rtopf_status rtopf_env_step(rtopf_env* env, const double* raw_action, double* next_state_normalized,
                            double* reward, double* cost4, int* terminal, int* pf_converged);

/* ---- pipeline commands (CLI surface) ------------------------------------ */

/* command: gen-data | expert | pretrain | train | eval | bench.
 * overrides_json: flag overrides merged over the config file, or NULL. */
rtopf_status rtopf_run_command(const char* command, const char* config_path,
                               const char* overrides_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RTOPF_H */
