#ifndef AIGSYNTH_H
#define AIGSYNTH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Solver variant selector, mirroring the command-line `--algo` flag.
 */
typedef enum AigsynthAlgo {
  /**
   * Concrete fixpoint over a monolithic transition relation.
   */
  AIGSYNTH_ALGO_C = 0,
  /**
   * Concrete fixpoint via transition-function substitution.
   */
  AIGSYNTH_ALGO_CTL = 1,
  /**
   * Abstraction refinement over a monolithic abstract relation.
   */
  AIGSYNTH_ALGO_A = 2,
  /**
   * Abstraction refinement with partitioned operators.
   */
  AIGSYNTH_ALGO_ATL = 3,
} AigsynthAlgo;

/**
 * Return code of every entry point.
 */
typedef enum AigsynthRc {
  /**
   * The call succeeded.
   */
  AIGSYNTH_RC_OK = 0,
  /**
   * A required pointer argument was null.
   */
  AIGSYNTH_RC_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  AIGSYNTH_RC_INVALID_UTF8 = 2,
  /**
   * The circuit text did not parse or failed validation.
   */
  AIGSYNTH_RC_PARSE_ERROR = 3,
  /**
   * A numeric argument was out of range.
   */
  AIGSYNTH_RC_INVALID_ARGUMENT = 4,
  /**
   * Synthesis produced no controller; the status out-value says why.
   */
  AIGSYNTH_RC_UNFINISHED = 5,
  /**
   * Internal failure; treat every out-value as unspecified.
   */
  AIGSYNTH_RC_INTERNAL = 6,
} AigsynthRc;

/**
 * Solver verdict, reported through an out-parameter.
 */
typedef enum AigsynthStatus {
  /**
   * The controller player can keep the circuit safe forever.
   */
  AIGSYNTH_STATUS_REALIZABLE = 0,
  /**
   * The environment can force the error output.
   */
  AIGSYNTH_STATUS_UNREALIZABLE = 1,
  /**
   * The time budget ran out before a verdict.
   */
  AIGSYNTH_STATUS_TIMEOUT = 2,
  /**
   * The node budget ran out before a verdict.
   */
  AIGSYNTH_STATUS_NODE_LIMIT = 3,
} AigsynthStatus;

/**
 * A parsed and validated synthesis instance. Opaque to C callers.
 */
typedef struct AigsynthInstance AigsynthInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static, NUL-terminated string.
 * The caller must not free it.
 */
const char *aigsynth_version(void);

/**
 * Parses `aag` circuit text into a new instance handle.
 *
 * On success writes the handle to `*out` and returns `Ok`; the handle
 * must eventually go to [`aigsynth_instance_free`]. On failure `*out`
 * is set to null.
 *
 * # Safety
 * `text` must be null or point to a NUL-terminated string; `out` must
 * be a valid pointer to writable memory.
 */
enum AigsynthRc aigsynth_instance_parse(const char *text, struct AigsynthInstance **out);

/**
 * Releases an instance handle. Passing null is a no-op.
 *
 * # Safety
 * `inst` must be null or a handle from [`aigsynth_instance_parse`] that
 * has not been freed yet.
 */
void aigsynth_instance_free(struct AigsynthInstance *inst);

/**
 * Reports the input and latch counts of an instance. Each out-pointer
 * may be null to skip that value.
 *
 * # Safety
 * `inst` must be a live handle from [`aigsynth_instance_parse`]; each
 * non-null out-pointer must point to writable memory.
 */
enum AigsynthRc aigsynth_instance_counts(const struct AigsynthInstance *inst,
                                         uint32_t *out_uncontrollable,
                                         uint32_t *out_controllable,
                                         uint32_t *out_latches);

/**
 * Decides realizability of an instance and writes the verdict to
 * `*out_status`. `timeout_secs` of zero disables the deadline and
 * `node_limit` of zero disables the node cap; a budget that runs out
 * is still `Ok` here, with the status reporting which budget it was.
 *
 * # Safety
 * `inst` must be a live handle from [`aigsynth_instance_parse`];
 * `out_status` must point to writable memory.
 */
enum AigsynthRc aigsynth_solve(const struct AigsynthInstance *inst,
                               enum AigsynthAlgo algo,
                               uint64_t timeout_secs,
                               uintptr_t node_limit,
                               enum AigsynthStatus *out_status);

/**
 * Synthesizes a controller and returns the controlled circuit as `aag`
 * text in `*out_aag` (release it with [`aigsynth_string_free`]).
 * `*out_gates`, when non-null, receives the controller's AND-gate
 * count. Returns `Ok` exactly when a verified controller was produced;
 * `Unfinished` means unrealizable or out of budget, with `*out_status`
 * saying which. Zero `timeout_secs` or `node_limit` disables that
 * budget; `rerun_reach` re-extracts restricted to the reachable states
 * of a first controller, which often shrinks it.
 *
 * # Safety
 * `inst` must be a live handle from [`aigsynth_instance_parse`];
 * `out_status` and `out_aag` must point to writable memory, and
 * `out_gates` must be null or do the same.
 */
enum AigsynthRc aigsynth_synthesize(const struct AigsynthInstance *inst,
                                    enum AigsynthAlgo algo,
                                    uint64_t timeout_secs,
                                    uintptr_t node_limit,
                                    bool rerun_reach,
                                    bool alt_restrict,
                                    enum AigsynthStatus *out_status,
                                    char **out_aag,
                                    uintptr_t *out_gates);

/**
 * Writes the n-bit ripple-counter benchmark as `aag` text to
 * `*out_aag` (release it with [`aigsynth_string_free`]). `n` must be
 * between 1 and 30.
 *
 * # Safety
 * `out_aag` must point to writable memory.
 */
enum AigsynthRc aigsynth_gen_cnt(uint32_t n, char **out_aag);

/**
 * Releases a string produced by this library. Passing null is a no-op.
 *
 * # Safety
 * `s` must be null or a string obtained from this library that has not
 * been freed yet.
 */
void aigsynth_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* AIGSYNTH_H */
