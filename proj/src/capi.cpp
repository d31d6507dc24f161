#include <conicfem.h>

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>
#include <utility>

#include "conicfem/errors.hpp"
#include "conicfem/experiments.hpp"
#include "conicfem/mds.hpp"
#include "conicfem/mesh.hpp"

struct conicfem_mesh {
    conicfem::CurvedTriangulation m;
};

namespace {

thread_local std::string g_last_error;

// Runs the body and folds every library error category onto its status
// code.  Success clears the thread-local message.
template <typename F>
conicfem_status guarded(F&& body) noexcept {
    try {
        body();
        g_last_error.clear();
        return CONICFEM_OK;
    } catch (const conicfem::GeometryError& e) {
        g_last_error = e.what();
        return CONICFEM_ERR_GEOMETRY;
    } catch (const conicfem::UsageError& e) {
        g_last_error = e.what();
        return CONICFEM_ERR_USAGE;
    } catch (const conicfem::ValidationError& e) {
        g_last_error = e.what();
        return CONICFEM_ERR_VALIDATION;
    } catch (const conicfem::SolverError& e) {
        g_last_error = e.what();
        return CONICFEM_ERR_SOLVER;
    } catch (const conicfem::IoError& e) {
        g_last_error = e.what();
        return CONICFEM_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CONICFEM_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return CONICFEM_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw conicfem::UsageError(what);
}

// C-owned copy released by conicfem_string_free.
char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

conicfem::ExperimentSpec spec_from_options(const conicfem_run_options& o) {
    using conicfem::Problem;
    using conicfem::Study;
    conicfem::ExperimentSpec spec;
    require(o.problem != nullptr, "run: problem name is required");
    const std::string problem = o.problem;
    if (problem == "ellipse") {
        spec.problem = Problem::ellipse_poisson;
    } else if (problem == "disk-eigen") {
        spec.problem = Problem::disk_eigen;
    } else if (problem == "conic") {
        spec.problem = Problem::conic_poisson;
    } else if (problem == "custom") {
        spec.problem = Problem::custom;
    } else {
        throw conicfem::UsageError("run: unknown problem \"" + problem + "\"");
    }
    const std::string study = o.study ? o.study : "h";
    if (study == "h") {
        spec.study = Study::h_refine;
    } else if (study == "p") {
        spec.study = Study::p_refine;
    } else {
        throw conicfem::UsageError("run: unknown study \"" + study + "\"");
    }
    if (o.degree != 0) spec.degree = o.degree;
    spec.degree_lo = o.degree_lo;
    spec.degree_hi = o.degree_hi;
    if (o.levels != 0) spec.levels = o.levels;
    spec.quad = o.quad;
    if (o.tol != 0.0) spec.tol = o.tol;
    if (o.out_path) spec.out = o.out_path;
    if (o.mesh_path) spec.mesh_file = o.mesh_path;
    return spec;
}

}  // namespace

extern "C" {

const char* conicfem_last_error(void) { return g_last_error.c_str(); }

void conicfem_string_free(char* s) { std::free(s); }

conicfem_status conicfem_mesh_builtin(const char* name, conicfem_mesh** out) {
    return guarded([&] {
        require(name != nullptr && out != nullptr, "mesh_builtin: NULL argument");
        const std::string which = name;
        conicfem::CurvedTriangulation m;
        if (which == "disk-fan") {
            m = conicfem::make_disk_fan();
        } else if (which == "disk") {
            m = conicfem::make_disk_mesh();
        } else if (which == "ellipse") {
            m = conicfem::make_ellipse_mesh();
        } else if (which == "conic") {
            m = conicfem::make_conic_mesh();
        } else {
            throw conicfem::UsageError("mesh_builtin: unknown mesh \"" + which + "\"");
        }
        *out = new conicfem_mesh{std::move(m)};
    });
}

conicfem_status conicfem_mesh_load(const char* path, conicfem_mesh** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "mesh_load: NULL argument");
        *out = new conicfem_mesh{conicfem::load_mesh(path)};
    });
}

conicfem_status conicfem_mesh_save(const conicfem_mesh* mesh, const char* path) {
    return guarded([&] {
        require(mesh != nullptr && path != nullptr, "mesh_save: NULL argument");
        conicfem::save_mesh(mesh->m, path);
    });
}

conicfem_status conicfem_mesh_refine(const conicfem_mesh* mesh, conicfem_mesh** out) {
    return guarded([&] {
        require(mesh != nullptr && out != nullptr, "mesh_refine: NULL argument");
        *out = new conicfem_mesh{conicfem::refine_uniform(mesh->m)};
    });
}

conicfem_status conicfem_mesh_counts(const conicfem_mesh* mesh, int* vertices, int* triangles) {
    return guarded([&] {
        require(mesh != nullptr, "mesh_counts: NULL mesh");
        if (vertices) *vertices = static_cast<int>(mesh->m.vertices.size());
        if (triangles) *triangles = static_cast<int>(mesh->m.triangles.size());
    });
}

conicfem_status conicfem_mesh_validate(const conicfem_mesh* mesh, int* violations, char** report) {
    return guarded([&] {
        require(mesh != nullptr && violations != nullptr, "mesh_validate: NULL argument");
        const std::vector<std::string> found = conicfem::validate_conditions(mesh->m);
        *violations = static_cast<int>(found.size());
        if (report) {
            std::string text;
            for (const std::string& v : found) {
                text += v;
                text += '\n';
            }
            *report = dup_string(text);
        }
    });
}

conicfem_status conicfem_mds_dimension(const conicfem_mesh* mesh, int degree, int* dimension) {
    return guarded([&] {
        require(mesh != nullptr && dimension != nullptr, "mds_dimension: NULL argument");
        *dimension = conicfem::build_mds(mesh->m, degree).size();
    });
}

void conicfem_mesh_free(conicfem_mesh* mesh) { delete mesh; }

conicfem_status conicfem_run_experiment(const conicfem_run_options* options, char** csv) {
    return guarded([&] {
        require(options != nullptr, "run: NULL options");
        const conicfem::ConvergenceTable table =
            conicfem::run_experiment(spec_from_options(*options));
        if (csv) *csv = dup_string(conicfem::format_table(table));
    });
}

}  // extern "C"
