#ifndef PARATRUNC_H
#define PARATRUNC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PARATRUNC_BUILDING)
#    define PT_API __declspec(dllexport)
#  else
#    define PT_API __declspec(dllimport)
#  endif
#else
#  define PT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes. Every function returning int uses these. */
#define PT_OK 0
#define PT_EINVAL 1   /* invalid argument or configuration */
#define PT_ENUMERIC 2 /* numerical failure (non-convergence, degenerate data) */
#define PT_EIO 3      /* file could not be read or written */

typedef struct pt_field pt_field;
typedef struct pt_nfunction pt_nfunction;

/* Message of the last failure on the calling thread; empty after success. */
PT_API const char* pt_last_error(void);
/* Frees strings returned through char** out-parameters. */
PT_API void pt_string_free(char* s);
PT_API int pt_schema_version(void);
/* Worker threads for parallel loops; values below 1 mean 1. */
PT_API int pt_set_threads(int n);

/* "p:<float>" or "table:<path>". */
PT_API int pt_nfunction_parse(const char* spec, pt_nfunction** out);
PT_API void pt_nfunction_free(pt_nfunction* f);
/* Any output pointer may be NULL. */
PT_API int pt_nfunction_eval(const pt_nfunction* f, double t, double* phi, double* dphi, double* conj);

PT_API int pt_field_read(const char* path, pt_field** out);
PT_API int pt_field_write(const pt_field* f, const char* path);
/* Preset w and its flux g on a base grid; n2 is ignored for m = 1. */
PT_API int pt_field_preset(const char* name, int m, int nt, int n1, int n2, double h, double tau, uint64_t seed,
                           pt_field** w, pt_field** g);
/* Borrowed view of the samples, valid until pt_field_free. */
PT_API int pt_field_data(const pt_field* f, const double** data, size_t* len);
/* JSON object with the grid description. */
PT_API int pt_field_info(const pt_field* f, char** json);
PT_API void pt_field_free(pt_field* f);

/* Runs one operation configured by a JSON object and returns the JSON
 * report. Operations: field_gen, field_convert, field_stats, maximal,
 * whitney, truncate, poincare, caloric_solve, caloric_experiment, sweep,
 * orlicz. */
PT_API int pt_run(const char* op, const char* config_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
