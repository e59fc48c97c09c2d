#include <stdio.h>
#include "mwg.h"

int main(void) {
    MwgMesh *mesh = NULL;
    MwgSolution *sol = NULL;
    MwgErrors err;

    if (mwg_mesh_uniform(4, &mesh) != MWG_STATUS_OK) {
        fprintf(stderr, "mesh: %s\n", mwg_last_error_message());
        return 1;
    }
    if (mwg_solve(mesh, 1, "paper1", 1e-10, &sol) != MWG_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", mwg_last_error_message());
        mwg_mesh_free(mesh);
        return 1;
    }
    mwg_solution_errors(sol, &err);
    printf("unknowns %zu  |Qu-uh| %.3e  |||e||| %.3e  |p-ph| %.3e\n",
           err.unknowns, err.err_u_l2, err.err_u_energy, err.err_p_l2);
    mwg_solution_free(sol);
    mwg_mesh_free(mesh);
    return 0;
}
