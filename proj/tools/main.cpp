#include <conicfem.h>

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

// Exit codes: 0 success, 2 validation/usage/input failure, 3 solver failure.
int exit_code(conicfem_status s) { return s == CONICFEM_ERR_SOLVER ? 3 : 2; }

int fail(conicfem_status s) {
    std::fprintf(stderr, "error: %s\n", conicfem_last_error());
    return exit_code(s);
}

// "D1..D2" with both endpoints integer.
bool parse_range(const std::string& text, int& lo, int& hi) {
    const size_t dots = text.find("..");
    if (dots == std::string::npos) return false;
    try {
        size_t used = 0;
        lo = std::stoi(text.substr(0, dots), &used);
        if (used != dots) return false;
        const std::string tail = text.substr(dots + 2);
        hi = std::stoi(tail, &used);
        return used == tail.size() && !tail.empty();
    } catch (const std::exception&) {
        return false;
    }
}

struct RunArgs {
    std::string problem;
    std::string study = "h";
    std::string degrees;
    std::string out;
    std::string mesh;
    int degree = 3;
    int levels = 3;
    int quad = 0;
    double tol = 1e-12;
};

int do_run(const RunArgs& args, bool study_given) {
    if (args.levels < 1) {
        std::fprintf(stderr, "error: --levels must be at least 1\n");
        return 2;
    }
    conicfem_run_options opt = {};
    opt.problem = args.problem.c_str();
    opt.degree = args.degree;
    opt.levels = args.levels;
    opt.quad = args.quad;
    opt.tol = args.tol;
    if (!args.out.empty()) opt.out_path = args.out.c_str();
    if (!args.mesh.empty()) opt.mesh_path = args.mesh.c_str();
    // A degree range switches to the p-study unless the user pinned one.
    std::string study = args.study;
    if (!args.degrees.empty()) {
        if (!parse_range(args.degrees, opt.degree_lo, opt.degree_hi)) {
            std::fprintf(stderr, "error: --degrees expects D1..D2, got \"%s\"\n",
                         args.degrees.c_str());
            return 2;
        }
        if (!study_given) study = "p";
    }
    opt.study = study.c_str();

    char* csv = nullptr;
    const conicfem_status s = conicfem_run_experiment(&opt, &csv);
    if (s != CONICFEM_OK) return fail(s);
    std::fputs(csv, stdout);
    conicfem_string_free(csv);
    return 0;
}

int do_validate(const std::string& path) {
    conicfem_mesh* mesh = nullptr;
    conicfem_status s = conicfem_mesh_load(path.c_str(), &mesh);
    if (s != CONICFEM_OK) return fail(s);
    int violations = 0;
    char* report = nullptr;
    s = conicfem_mesh_validate(mesh, &violations, &report);
    conicfem_mesh_free(mesh);
    if (s != CONICFEM_OK) return fail(s);
    if (violations == 0) {
        std::printf("mesh ok\n");
        conicfem_string_free(report);
        return 0;
    }
    std::fputs(report, stderr);
    std::fprintf(stderr, "%d violation(s)\n", violations);
    conicfem_string_free(report);
    return 2;
}

int do_dims(const std::string& path, int degree) {
    conicfem_mesh* mesh = nullptr;
    conicfem_status s = conicfem_mesh_load(path.c_str(), &mesh);
    if (s != CONICFEM_OK) return fail(s);
    int vertices = 0, triangles = 0, dimension = 0;
    s = conicfem_mesh_counts(mesh, &vertices, &triangles);
    if (s == CONICFEM_OK) s = conicfem_mds_dimension(mesh, degree, &dimension);
    conicfem_mesh_free(mesh);
    if (s != CONICFEM_OK) return fail(s);
    std::printf("vertices %d\ntriangles %d\nN %d\n", vertices, triangles, dimension);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite elements on planar domains bounded by piecewise conics"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run a convergence study and print its CSV table");
    run->add_option("--problem", run_args.problem, "ellipse | disk-eigen | conic | custom")
        ->required();
    run->add_option("--degree", run_args.degree, "polynomial degree for h-studies");
    run->add_option("--degrees", run_args.degrees, "degree range D1..D2 for p-studies");
    run->add_option("--levels", run_args.levels, "number of h-refinement levels");
    run->add_option("--study", run_args.study, "h | p")->check(CLI::IsMember({"h", "p"}));
    run->add_option("--quad", run_args.quad, "quadrature order (0 = degree + 4)");
    run->add_option("--tol", run_args.tol, "solver tolerance");
    run->add_option("--out", run_args.out, "also write the CSV table to this path");
    run->add_option("--mesh", run_args.mesh, "mesh file for --problem custom");

    std::string validate_mesh;
    CLI::App* validate =
        app.add_subcommand("validate", "Check a mesh against the admissibility conditions");
    validate->add_option("--mesh", validate_mesh, "mesh file")->required();

    std::string dims_mesh;
    int dims_degree = 3;
    CLI::App* dims =
        app.add_subcommand("dims", "Report mesh counts and the spline space dimension");
    dims->add_option("--mesh", dims_mesh, "mesh file")->required();
    dims->add_option("--degree", dims_degree, "polynomial degree");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Collapse CLI11's parse-error codes onto the documented usage code.
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (run->parsed()) return do_run(run_args, run->count("--study") > 0);
    if (validate->parsed()) return do_validate(validate_mesh);
    return do_dims(dims_mesh, dims_degree);
}
