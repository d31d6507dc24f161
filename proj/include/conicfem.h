#ifndef CONICFEM_H
#define CONICFEM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* C interface to the conicfem library.  Every fallible call returns a status
 * code; on failure the thread-local message from conicfem_last_error()
 * describes what went wrong.  Objects returned through out-parameters are
 * owned by the caller and released with the matching _free function. */

typedef enum conicfem_status {
    CONICFEM_OK = 0,
    CONICFEM_ERR_GEOMETRY = 1,   /* degenerate or inadmissible geometry */
    CONICFEM_ERR_USAGE = 2,      /* precondition violated by the caller */
    CONICFEM_ERR_VALIDATION = 3, /* mesh fails the admissibility conditions */
    CONICFEM_ERR_SOLVER = 4,     /* solver missed the requested tolerance */
    CONICFEM_ERR_IO = 5,         /* file or format problem */
    CONICFEM_ERR_INTERNAL = 6    /* unexpected failure outside the above */
} conicfem_status;

/* Message of the most recent failure on the calling thread; the empty
 * string when the last call succeeded.  The pointer stays valid until the
 * next library call on the same thread. */
const char* conicfem_last_error(void);

/* Releases a string allocated by this library.  NULL is a no-op. */
void conicfem_string_free(char* s);

/* Opaque curved triangulation handle. */
typedef struct conicfem_mesh conicfem_mesh;

/* Built-in initial triangulations: "disk-fan", "disk", "ellipse", "conic". */
conicfem_status conicfem_mesh_builtin(const char* name, conicfem_mesh** out);

/* Reads or writes the JSON mesh format. */
conicfem_status conicfem_mesh_load(const char* path, conicfem_mesh** out);
conicfem_status conicfem_mesh_save(const conicfem_mesh* mesh, const char* path);

/* Uniform 1:4 refinement. */
conicfem_status conicfem_mesh_refine(const conicfem_mesh* mesh, conicfem_mesh** out);

/* Vertex and triangle counts; either out-pointer may be NULL. */
conicfem_status conicfem_mesh_counts(const conicfem_mesh* mesh, int* vertices, int* triangles);

/* Checks the admissibility conditions.  Returns CONICFEM_OK whenever the
 * check itself ran; *violations receives the number of failed conditions
 * and, when report is non-NULL, *report receives a newline-separated
 * description (empty string for a conforming mesh). */
conicfem_status conicfem_mesh_validate(const conicfem_mesh* mesh, int* violations, char** report);

/* Dimension of the degree-d homogeneous spline space on the mesh. */
conicfem_status conicfem_mds_dimension(const conicfem_mesh* mesh, int degree, int* dimension);

void conicfem_mesh_free(conicfem_mesh* mesh);

/* Convergence-study driver.  Zero or NULL fields select the documented
 * defaults; degree_lo/degree_hi are consulted only when study is "p". */
typedef struct conicfem_run_options {
    const char* problem;   /* "ellipse" | "disk-eigen" | "conic" | "custom" */
    const char* study;     /* "h" (default) | "p" */
    int degree;            /* h-study degree, default 3 */
    int degree_lo;         /* p-study degree range */
    int degree_hi;
    int levels;            /* h-study levels, default 3 */
    int quad;              /* quadrature order, 0 = degree + 4 */
    double tol;            /* solver tolerance, 0 = 1e-12 */
    const char* out_path;  /* optional CSV destination */
    const char* mesh_path; /* mesh file, required for "custom" */
} conicfem_run_options;

/* Runs the study; when csv is non-NULL, *csv receives the full table
 * (header plus rows) as one allocated string, byte-identical to the file
 * written to out_path. */
conicfem_status conicfem_run_experiment(const conicfem_run_options* options, char** csv);

#ifdef __cplusplus
}
#endif

#endif
