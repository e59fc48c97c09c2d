#ifndef MWG_H
#define MWG_H

#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible call.
typedef enum MwgStatus {
  MWG_STATUS_OK = 0,
  MWG_STATUS_NULL_POINTER = 1,
  MWG_STATUS_INVALID_ARGUMENT = 2,
  MWG_STATUS_MESH_ERROR = 3,
  MWG_STATUS_NUMERICAL_ERROR = 4,
  MWG_STATUS_UNKNOWN_SOLUTION = 5,
  MWG_STATUS_IO_ERROR = 6,
  MWG_STATUS_PANIC = 7,
} MwgStatus;

// Opaque mesh handle.
typedef struct MwgMesh MwgMesh;

// Opaque handle to a discrete solution and its error report.
typedef struct MwgSolution MwgSolution;

// Error measures of a solution against the exact manufactured solution.
typedef struct MwgErrors {
  size_t cells;
  size_t unknowns;
  double err_u_l2;
  double err_u_energy;
  double err_p_l2;
  double err_p_jump;
  double solve_residual;
} MwgErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The string
// stays valid until the next failing call on the same thread.
const char *mwg_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mwg_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a pointer previously returned by this library and
// not yet freed.
void mwg_string_free(char *s);

// Uniform mesh of the unit cube with `n` cells per direction.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum MwgStatus mwg_mesh_uniform(size_t n, struct MwgMesh **out);

// Mesh from its JSON description (vertices, faces with owner/neighbor,
// cells as face lists).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum MwgStatus mwg_mesh_from_json(const char *json, struct MwgMesh **out);

// JSON description of a mesh; release with [`mwg_string_free`].
//
// # Safety
// `mesh` must be a live handle; `out` must be writable.
enum MwgStatus mwg_mesh_to_json(const struct MwgMesh *mesh, char **out);

// Number of cells and faces.
//
// # Safety
// `mesh` must be a live handle; `cells` and `faces` must be writable.
enum MwgStatus mwg_mesh_size(const struct MwgMesh *mesh, size_t *cells, size_t *faces);

// Runs the mesh checks and stores the number of violations. The first
// violation, if any, is available from [`mwg_last_error_message`].
//
// # Safety
// `mesh` must be a live handle; `violations` must be writable.
enum MwgStatus mwg_mesh_validate(const struct MwgMesh *mesh, size_t *violations);

// Releases a mesh handle.
//
// # Safety
// `mesh` must be null or a live handle; it must not be used afterwards.
void mwg_mesh_free(struct MwgMesh *mesh);

// Solves with degree `degree` for the named built-in solution and measures
// the errors against it.
//
// # Safety
// `mesh` must be a live handle, `solution` a NUL-terminated string and
// `out` writable.
enum MwgStatus mwg_solve(const struct MwgMesh *mesh,
                         unsigned int degree,
                         const char *solution,
                         double tol,
                         struct MwgSolution **out);

// Error report of a solution.
//
// # Safety
// `sol` must be a live handle; `out` must be writable.
enum MwgStatus mwg_solution_errors(const struct MwgSolution *sol, struct MwgErrors *out);

// Borrowed view of the velocity coefficients (`3 dim P_k` per cell,
// component-major). Valid while the handle lives.
//
// # Safety
// `sol` must be a live handle; `data` and `len` must be writable.
enum MwgStatus mwg_solution_velocity(const struct MwgSolution *sol,
                                     const double **data,
                                     size_t *len);

// Borrowed view of the pressure coefficients (`dim P_{k-1}` per cell).
// Valid while the handle lives.
//
// # Safety
// `sol` must be a live handle; `data` and `len` must be writable.
enum MwgStatus mwg_solution_pressure(const struct MwgSolution *sol,
                                     const double **data,
                                     size_t *len);

// Per-cell coefficients as JSON; release with [`mwg_string_free`].
//
// # Safety
// `sol` must be a live handle; `out` must be writable.
enum MwgStatus mwg_solution_to_json(const struct MwgSolution *sol, char **out);

// Releases a solution handle.
//
// # Safety
// `sol` must be null or a live handle; it must not be used afterwards.
void mwg_solution_free(struct MwgSolution *sol);

// `log2(coarse / fine)`.
//
// # Safety
// `out` must be writable.
enum MwgStatus mwg_convergence_order(double coarse, double fine, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MWG_H */
