#ifndef REPEATER_H
#define REPEATER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RpStatus {
  RP_STATUS_OK = 0,
  RP_STATUS_NULL_POINTER = 1,
  RP_STATUS_INVALID_ARGUMENT = 2,
  RP_STATUS_DIMENSION_MISMATCH = 3,
  RP_STATUS_STATE_SPACE_CAP = 4,
  RP_STATUS_NUMERICAL = 5,
  RP_STATUS_UNSUPPORTED = 6,
  RP_STATUS_PANIC = 7,
} RpStatus;

typedef enum RpProtocol {
  RP_PROTOCOL_MODIFIED_DOUBLING = 0,
  RP_PROTOCOL_COGNITIVE = 1,
  RP_PROTOCOL_AUXILIARY_VIRTUAL = 2,
} RpProtocol;

typedef enum RpRule {
  RP_RULE_BLOCK = 0,
  RP_RULE_DISCARD_OLDEST = 1,
} RpRule;

/**
 * A chain configuration with an optional memory allocation.
 */
typedef struct RpChain RpChain;

/**
 * Results of one simulation run.
 */
typedef struct RpSimStats RpSimStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rp_version(void);

/**
 * Creates a chain of `2^k` links.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum RpStatus rp_chain_new(uint32_t k,
                           double p,
                           double q,
                           double d,
                           double c,
                           struct RpChain **out);

/**
 * # Safety
 * `chain` must be NULL or a handle from [`rp_chain_new`] not yet freed.
 */
void rp_chain_free(struct RpChain *chain);

/**
 * Reserves `levels[i]` memories per side for level `i`; `len` must be `k`.
 *
 * # Safety
 * `chain` must be a live handle and `levels` must point to `len` values.
 */
enum RpStatus rp_chain_set_reserved(struct RpChain *chain, const uint32_t *levels, size_t len);

/**
 * Gives every link side a shared pool of `b` memories.
 *
 * # Safety
 * `chain` must be a live handle.
 */
enum RpStatus rp_chain_set_cognitive(struct RpChain *chain, uint32_t b);

/**
 * Small-q lower bound on the modified doubling rate of a reserved chain.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum RpStatus rp_rate_lower_bound_doubling(const struct RpChain *chain, double *out);

/**
 * Small-q lower bound on the cognitive rate over `2^i` links.
 *
 * # Safety
 * `out` must be writable.
 */
enum RpStatus rp_rate_lower_bound_cognitive(double p,
                                            double q,
                                            uint32_t b,
                                            uint32_t i,
                                            double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum RpStatus rp_cognitive_f(uint32_t b, uint32_t i, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum RpStatus rp_select_i0(double gamma, double delta, uint32_t *out);

/**
 * Stationary delivery rate from the exact Markov chain.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum RpStatus rp_exact_rate(const struct RpChain *chain,
                            enum RpProtocol protocol,
                            enum RpRule rule,
                            double *out);

/**
 * Simulates until `horizon_time`.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum RpStatus rp_simulate(const struct RpChain *chain,
                          enum RpProtocol protocol,
                          enum RpRule rule,
                          bool classical_delay,
                          double horizon_time,
                          uint64_t seed,
                          struct RpSimStats **out);

/**
 * Delivery rate and its confidence half-width.
 *
 * # Safety
 * `stats` must be a live handle; `rate` and `half_width` writable.
 */
enum RpStatus rp_stats_rate(const struct RpSimStats *stats, double *rate, double *half_width);

/**
 * Chain-average communication-delay memory.
 *
 * # Safety
 * `stats` must be a live handle and `out` writable.
 */
enum RpStatus rp_stats_comm_memory(const struct RpSimStats *stats, double *out);

/**
 * Number of delivered end-to-end pairs, or 0 for a NULL handle.
 *
 * # Safety
 * `stats` must be NULL or a live handle.
 */
uint64_t rp_stats_delivered(const struct RpSimStats *stats);

/**
 * # Safety
 * `stats` must be NULL or a handle from [`rp_simulate`] not yet freed.
 */
void rp_stats_free(struct RpSimStats *stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REPEATER_H */
