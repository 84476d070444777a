/* fkms - fermionic KMS laboratory, C API.
 *
 * The core is a C++ library; this header is the stable boundary. A scenario
 * is an opaque handle created from a JSON configuration (file or string),
 * optionally adjusted, run once, and inspected through its JSON report.
 *
 * All functions returning fkms_status use 0 for success; on any failure
 * fkms_last_error() describes the most recent error in the calling thread.
 * Exit-code semantics of fkms_scenario_run match the CLI contract:
 *   0 every enabled check passed (or was inconclusive by design)
 *   1 at least one check failed
 *   2 configuration problem (parse error, unknown experiment, bad field)
 *   3 numeric-budget violation detected mid-run (a convergence hypothesis
 *     of the underlying theorem does not hold for the supplied data)
 *   4 internal error
 */
#ifndef FKMS_H
#define FKMS_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct fkms_scenario fkms_scenario;

typedef enum fkms_status {
  FKMS_OK = 0,
  FKMS_CHECK_FAILED = 1,
  FKMS_BAD_CONFIG = 2,
  FKMS_BUDGET_VIOLATION = 3,
  FKMS_INTERNAL_ERROR = 4
} fkms_status;

const char* fkms_version(void);

/* Thread-local message for the last failure; never NULL. */
const char* fkms_last_error(void);

fkms_status fkms_scenario_create_from_file(const char* path,
                                           fkms_scenario** out);
fkms_status fkms_scenario_create_from_string(const char* json_text,
                                             fkms_scenario** out);

fkms_status fkms_scenario_set_output_dir(fkms_scenario* s, const char* dir);
fkms_status fkms_scenario_set_experiment(fkms_scenario* s, const char* name);
fkms_status fkms_scenario_set_seed(fkms_scenario* s, long long seed);

/* Runs the experiment; report.json and CSV series are written to the output
 * directory. The returned status is the CLI exit code. */
fkms_status fkms_scenario_run(fkms_scenario* s);

/* JSON report of the last run; valid until the scenario is destroyed.
 * NULL if the scenario has not been run. */
const char* fkms_scenario_report_json(const fkms_scenario* s);

void fkms_scenario_destroy(fkms_scenario* s);

#ifdef __cplusplus
}
#endif

#endif /* FKMS_H */
