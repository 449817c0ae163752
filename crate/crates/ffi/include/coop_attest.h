#ifndef COOP_ATTEST_H
#define COOP_ATTEST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CA_DIGEST_LEN 32

#define CA_PUBLIC_KEY_LEN 32

#define CA_SIGNATURE_LEN 64

typedef enum ca_status {
  CA_OK = 0,
  // A required pointer was null or a length was wrong.
  CA_INVALID_ARGUMENT = 1,
  // Input bytes are not a canonical encoding of the expected type.
  CA_DECODE_ERROR = 2,
  CA_CRYPTO_ERROR = 3,
  // A signature or attestation did not verify.
  CA_VERIFICATION_FAILED = 4,
  // Scenario config failed validation.
  CA_CONFIG_INVALID = 5,
  // A scenario script action failed at run time.
  CA_SCENARIO_FAILED = 6,
  // Caller buffer too small; the needed size was written back.
  CA_BUFFER_TOO_SMALL = 7,
  CA_PANIC = 255,
} ca_status;

// Opaque countersigned attestation.
typedef struct ca_attestation ca_attestation;

// Opaque scenario event log with its canonical line encoding.
typedef struct ca_event_log ca_event_log;

// Opaque key pair.
typedef struct ca_keypair ca_keypair;

// Per-check outcome of verifying a countersigned attestation; 1 = pass.
typedef struct ca_report {
  uint8_t decodes;
  uint8_t issuer_signature;
  uint8_t notary_signature;
  uint8_t not_expired;
  uint8_t subject_non_identifying;
  uint8_t passed;
} ca_report;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until
// the next call into this library on the same thread.
const char *ca_last_error(void);

// Library version as a static NUL-terminated string.
const char *ca_version(void);

enum ca_status ca_digest(const uint8_t *data, size_t len, uint8_t *out_digest);

// Derive a key pair from a non-empty seed.
enum ca_status ca_keypair_from_seed(const uint8_t *seed,
                                    size_t seed_len,
                                    struct ca_keypair **out_keypair);

void ca_keypair_free(struct ca_keypair *keypair);

enum ca_status ca_keypair_public_key(const struct ca_keypair *keypair, uint8_t *out_public_key);

enum ca_status ca_keypair_key_id(const struct ca_keypair *keypair, uint8_t *out_key_id);

// Sign `message` under a registered domain tag; writes 64 bytes.
enum ca_status ca_sign(const struct ca_keypair *keypair,
                       const char *domain_tag,
                       const uint8_t *message,
                       size_t message_len,
                       uint8_t *out_signature);

// `CA_OK` if the signature verifies, `CA_VERIFICATION_FAILED` if not.
enum ca_status ca_verify(const uint8_t *public_key,
                         size_t public_key_len,
                         const char *domain_tag,
                         const uint8_t *message,
                         size_t message_len,
                         const uint8_t *signature);

// Decode a countersigned attestation from its canonical bytes or from a
// `.att` document.
enum ca_status ca_attestation_decode(const uint8_t *data,
                                     size_t len,
                                     struct ca_attestation **out_attestation);

void ca_attestation_free(struct ca_attestation *attestation);

enum ca_status ca_attestation_id(const struct ca_attestation *attestation, uint8_t *out_id);

enum ca_status ca_attestation_expires_at(const struct ca_attestation *attestation,
                                         uint64_t *out_tick);

// Verify against explicit issuer and notary keys at tick `now`. The
// report is always written; the status is `CA_VERIFICATION_FAILED` if any
// check failed.
enum ca_status ca_attestation_verify(const struct ca_attestation *attestation,
                                     const uint8_t *issuer_public_key,
                                     size_t issuer_public_key_len,
                                     const uint8_t *notary_public_key,
                                     size_t notary_public_key_len,
                                     uint64_t now,
                                     struct ca_report *out_report);

// Like [`ca_attestation_verify`] but straight from canonical bytes;
// non-canonical input reports `decodes = 0`.
enum ca_status ca_verify_countersigned_bytes(const uint8_t *data,
                                             size_t len,
                                             const uint8_t *issuer_public_key,
                                             size_t issuer_public_key_len,
                                             const uint8_t *notary_public_key,
                                             size_t notary_public_key_len,
                                             uint64_t now,
                                             struct ca_report *out_report);

// Number of validation problems in a canonical scenario config; the
// first one is available from [`ca_last_error`].
enum ca_status ca_validate_config(const uint8_t *config, size_t len, size_t *out_problems);

// Run a canonical scenario config to completion.
enum ca_status ca_run_scenario(const uint8_t *config, size_t len, struct ca_event_log **out_log);

void ca_event_log_free(struct ca_event_log *log);

enum ca_status ca_event_log_len(const struct ca_event_log *log, size_t *out_events);

// Borrow the log's line-delimited canonical bytes; valid until the log
// is freed.
enum ca_status ca_event_log_bytes(const struct ca_event_log *log,
                                  const uint8_t **out_data,
                                  size_t *out_len);

// Copy the log bytes into a caller buffer. With a null or short buffer,
// writes the needed size and returns `CA_BUFFER_TOO_SMALL`.
enum ca_status ca_event_log_copy(const struct ca_event_log *log,
                                 uint8_t *buf,
                                 size_t cap,
                                 size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COOP_ATTEST_H */
