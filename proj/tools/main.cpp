#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cli_io.hpp"
#include "mot/core.hpp"
#include "mot/finetune.hpp"
#include "mot/gtot.hpp"
#include "mot/oracle.hpp"
#include "mot/sinkhorn.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "mot 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitGradcheck = 3;

json matrix_to_json(const mot::Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_report(const json& report, const std::string& out_path) {
    if (out_path.empty() || out_path == "stdout") {
        std::cout << report.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out)
        throw mot::Error(mot::ErrorCode::InvalidInput, "cannot write '" + out_path + "'");
    out << report.dump(2) << "\n";
}

/// Shared mask vocabulary: ones | identity | graph (adjacency of --graph,
/// optionally raised to --power) | a CSV file whose positive entries mark the
/// allowed slots.
mot::MaskMatrix resolve_mask(const std::string& mask_arg, const std::string& graph_path,
                             int power, std::size_t rows, std::size_t cols) {
    if (mask_arg == "ones")
        return mot::MaskMatrix::ones(rows, cols);
    if (mask_arg == "identity") {
        if (rows != cols)
            throw mot::Error(mot::ErrorCode::InvalidInput,
                             "identity mask needs a square problem");
        return mot::MaskMatrix::identity(rows);
    }
    if (mask_arg == "graph") {
        if (graph_path.empty())
            throw mot::Error(mot::ErrorCode::InvalidInput, "--mask graph requires --graph");
        const mot::GraphTopology g = motcli::read_graph_json(graph_path);
        if (g.n != rows || g.n != cols)
            throw mot::Error(mot::ErrorCode::InvalidInput,
                             "graph vertex count disagrees with the problem size");
        return mot::build_mask(g, power == 1 ? mot::MaskSpec::adjacency()
                                             : mot::MaskSpec::adjacency_power(power));
    }
    if (mask_arg.size() >= 4 && mask_arg.substr(mask_arg.size() - 4) == ".csv") {
        const mot::Matrix m = motcli::read_csv_matrix(mask_arg);
        if (m.rows() != rows || m.cols() != cols)
            throw mot::Error(mot::ErrorCode::InvalidInput,
                             "mask file shape disagrees with the problem size");
        return mot::MaskMatrix::from_support(m);
    }
    throw mot::Error(mot::ErrorCode::InvalidInput,
                     "unknown mask '" + mask_arg + "' (ones|identity|graph|<file.csv>)");
}

mot::ProbVec resolve_marginal(const std::string& path, std::size_t n, const char* which) {
    if (path.empty())
        return mot::ProbVec::uniform(n);
    mot::Vec v = motcli::read_csv_vector(path);
    if (v.size() != n)
        throw mot::Error(mot::ErrorCode::InvalidInput,
                         std::string(which) + " marginal length disagrees with the problem size");
    return mot::ProbVec(std::move(v));
}

struct MwdArgs {
    std::string cost_path;
    std::string source_path;
    std::string target_path;
    bool cosine = false;
    std::string mask = "ones";
    std::string graph_path;
    int power = 1;
    std::string row_marginals;
    std::string col_marginals;
    double epsilon = 0.05;
    double tau = 1e-6;
    int max_iter = 10000;
    bool normalize = false;
    bool emit_plan = false;
    bool oracle = false;
    bool header = false;
    std::string out = "stdout";
};

int run_mwd(const MwdArgs& args) {
    if (args.cost_path.empty() == (args.source_path.empty() && args.target_path.empty()))
        throw mot::Error(mot::ErrorCode::InvalidInput,
                         "provide either --cost or --source/--target");

    mot::CostMatrix cost = [&] {
        if (!args.cost_path.empty())
            return mot::CostMatrix(motcli::read_csv_matrix(args.cost_path, args.header));
        if (args.source_path.empty() || args.target_path.empty())
            throw mot::Error(mot::ErrorCode::InvalidInput,
                             "--source and --target must be given together");
        // Cosine dissimilarity is the only pairwise cost on embeddings;
        // --cosine states it explicitly.
        return mot::cosine_cost(motcli::read_csv_matrix(args.source_path, args.header),
                                motcli::read_csv_matrix(args.target_path, args.header));
    }();
    if (args.normalize)
        cost = mot::normalize_cost(cost);

    const mot::MaskMatrix mask =
        resolve_mask(args.mask, args.graph_path, args.power, cost.rows(), cost.cols());
    const mot::ProbVec a = resolve_marginal(args.row_marginals, cost.rows(), "row");
    const mot::ProbVec b = resolve_marginal(args.col_marginals, cost.cols(), "column");

    mot::SolverConfig cfg;
    cfg.epsilon = args.epsilon;
    cfg.tau = args.tau;
    cfg.max_iter = args.max_iter;

    const mot::MwdSolution sol = mot::solve_mwd(cost, mask, a, b, cfg);

    json report;
    report["distance"] = sol.distance;
    report["iterations"] = sol.report.iterations;
    report["converged"] = sol.report.converged;
    report["marginal_residual"] =
        std::max(sol.report.marginal_residual_row, sol.report.marginal_residual_col);
    if (args.emit_plan)
        report["plan"] = matrix_to_json(sol.plan.values());
    if (args.oracle) {
        const mot::ExactMwd exact = mot::exact_mwd(cost, mask, a, b);
        if (!exact.feasible())
            throw mot::Error(mot::ErrorCode::Infeasible,
                             "oracle certifies the masked problem infeasible");
        report["oracle_value"] = exact.value;
        report["oracle_gap"] = std::abs(sol.distance - exact.value);
    }
    json config;
    config["command"] = "mwd";
    config["cost"] = args.cost_path;
    config["source"] = args.source_path;
    config["target"] = args.target_path;
    config["cosine"] = args.cosine || !args.source_path.empty();
    config["mask"] = args.mask;
    config["graph"] = args.graph_path;
    config["power"] = args.power;
    config["row_marginals"] = args.row_marginals;
    config["col_marginals"] = args.col_marginals;
    config["epsilon"] = cfg.epsilon;
    config["tau"] = cfg.tau;
    config["max_iter"] = cfg.max_iter;
    config["normalize"] = args.normalize;
    config["emit_plan"] = args.emit_plan;
    config["oracle"] = args.oracle;
    config["header"] = args.header;
    report["config"] = std::move(config);

    write_report(report, args.out);
    return kExitOk;
}

struct GtotArgs {
    std::string graph_path;
    std::string source_path;
    std::string target_path;
    bool header = false;
    std::string mask = "graph";
    int power = 1;
    double epsilon = 0.05;
    double tau = 1e-6;
    int max_iter = 10000;
    bool no_normalize = false;
    bool mgwd = false;
    int outer_iters = 50;
    double lambda = -1.0; // negative = not requested
    double beta = -1.0;
    bool emit_plan = false;
    std::string out = "stdout";
};

int run_gtot(const GtotArgs& args) {
    const mot::GraphTopology g = motcli::read_graph_json(args.graph_path);
    const mot::Matrix source = motcli::read_csv_matrix(args.source_path, args.header);
    const mot::Matrix target = motcli::read_csv_matrix(args.target_path, args.header);

    mot::MaskSpec spec = mot::MaskSpec::adjacency();
    if (args.mask == "ones")
        spec = mot::MaskSpec::ones();
    else if (args.mask == "identity")
        spec = mot::MaskSpec::identity();
    else if (args.mask == "graph")
        spec = args.power == 1 ? mot::MaskSpec::adjacency()
                               : mot::MaskSpec::adjacency_power(args.power);
    else
        throw mot::Error(mot::ErrorCode::InvalidInput,
                         "unknown mask '" + args.mask + "' (ones|identity|graph)");

    mot::SolverConfig cfg;
    cfg.epsilon = args.epsilon;
    cfg.tau = args.tau;
    cfg.max_iter = args.max_iter;
    const bool normalize = !args.no_normalize;

    const mot::RegularizerValue mwd =
        mot::gtot_regularizer(g, source, target, spec, cfg, normalize);

    const bool want_combined = args.lambda >= 0.0 || args.beta >= 0.0;
    const double lambda = args.lambda >= 0.0 ? args.lambda : 0.0;
    const double beta = args.beta >= 0.0 ? args.beta : 0.0;
    const bool want_mgwd = args.mgwd || beta > 0.0;

    std::optional<mot::RegularizerValue> mgwd;
    if (want_mgwd)
        mgwd = mot::mgwd_regularizer(g, source, target, spec, cfg, args.outer_iters, normalize);

    json report;
    report["distance"] = mwd.value;
    report["mwd"] = mwd.value;
    if (mgwd)
        report["mgwd"] = mgwd->value;
    if (want_combined)
        report["combined_penalty"] =
            mot::combined_objective(0.0, mwd.value, mgwd ? mgwd->value : 0.0, lambda, beta);
    report["iterations"] = mwd.report.iterations;
    report["converged"] = mwd.report.converged;
    report["marginal_residual"] =
        std::max(mwd.report.marginal_residual_row, mwd.report.marginal_residual_col);
    if (args.emit_plan)
        report["plan"] = matrix_to_json(mwd.plan.values());

    json config;
    config["command"] = "gtot";
    config["graph"] = args.graph_path;
    config["source"] = args.source_path;
    config["target"] = args.target_path;
    config["header"] = args.header;
    config["mask"] = args.mask;
    config["power"] = args.power;
    config["epsilon"] = cfg.epsilon;
    config["tau"] = cfg.tau;
    config["max_iter"] = cfg.max_iter;
    config["normalize"] = normalize;
    config["mgwd"] = want_mgwd;
    config["outer_iters"] = args.outer_iters;
    config["lambda"] = lambda;
    config["beta"] = beta;
    config["emit_plan"] = args.emit_plan;
    report["config"] = std::move(config);

    write_report(report, args.out);
    return kExitOk;
}

struct DemoArgs {
    std::uint64_t seed = 7;
    double lambda = 0.1;
    double beta = 0.0;
    int epochs = 100;
    double lr = 0.01;
    std::string out_history;
    bool gradcheck = false;
    double gradcheck_tol = 1e-3;
};

int run_demo(const DemoArgs& args) {
    // Synthetic transfer pair: class-separable graphs; target features are
    // rotated and shifted away from the source domain.
    const auto [source_set, target_set] =
        mot::make_synthetic_transfer(args.seed, 10, 5, 8, 4, 2, 0.6);

    // "Pretrain" on the source split: plain cross-entropy from a seeded
    // random start to build the anchor model.
    mot::Rng rng(args.seed ^ 0x9e3779b97f4a7c15ull);
    mot::ToyMpnn init = mot::ToyMpnn::random_init(2, 4, 2, rng);
    mot::TrainConfig pretrain_cfg;
    pretrain_cfg.lambda = 0.0;
    pretrain_cfg.beta = 0.0;
    pretrain_cfg.epochs = 60;
    pretrain_cfg.learning_rate = 0.05;
    const mot::FinetuneResult pretrained = mot::gtot_finetune(init, source_set, pretrain_cfg);
    const mot::ToyMpnn& source_model = pretrained.model;

    mot::TrainConfig cfg;
    cfg.lambda = args.lambda;
    cfg.beta = args.beta;
    cfg.epochs = args.epochs;
    cfg.learning_rate = args.lr;

    if (args.gradcheck) {
        const double err = mot::gradient_check(source_model, source_model, target_set[0], cfg);
        std::fprintf(stdout, "gradcheck max_relative_error %.17g (tol %.17g)\n", err,
                     args.gradcheck_tol);
        if (!(err <= args.gradcheck_tol)) {
            std::fprintf(stderr, "error: gradient check failed: %.17g > %.17g\n", err,
                         args.gradcheck_tol);
            return kExitGradcheck;
        }
    }

    const mot::FinetuneResult result = mot::gtot_finetune(source_model, target_set, cfg);

    if (!args.out_history.empty()) {
        std::ofstream out(args.out_history);
        if (!out)
            throw mot::Error(mot::ErrorCode::InvalidInput,
                             "cannot write '" + args.out_history + "'");
        mot::write_history_csv(result.history, out);
    }

    const mot::EpochStats& first = result.history.front();
    const mot::EpochStats& last = result.history.back();
    std::fprintf(stdout, "epochs %d\n", args.epochs);
    std::fprintf(stdout, "initial_objective %.17g\n", first.objective);
    std::fprintf(stdout, "final_objective %.17g\n", last.objective);
    std::fprintf(stdout, "final_task_loss %.17g\n", last.task_loss);
    std::fprintf(stdout, "weight_distance %.17g\n",
                 mot::weight_distance(result.model, source_model));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked optimal transport toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    MwdArgs mwd;
    CLI::App* mwd_cmd = app.add_subcommand("mwd", "Masked Wasserstein distance between files");
    mwd_cmd->set_version_flag("--version", kVersion);
    mwd_cmd->add_option("--cost", mwd.cost_path, "Cost matrix CSV");
    mwd_cmd->add_option("--source", mwd.source_path, "Source embedding CSV (cosine cost)");
    mwd_cmd->add_option("--target", mwd.target_path, "Target embedding CSV (cosine cost)");
    mwd_cmd->add_flag("--cosine", mwd.cosine, "State the embedding cost explicitly");
    mwd_cmd->add_option("--mask", mwd.mask, "ones|identity|graph|<file.csv>")
        ->capture_default_str();
    mwd_cmd->add_option("--graph", mwd.graph_path, "Graph JSON for --mask graph");
    mwd_cmd->add_option("--power", mwd.power, "Adjacency power for --mask graph")
        ->capture_default_str();
    mwd_cmd->add_option("--row-marginals", mwd.row_marginals, "CSV vector (default uniform)");
    mwd_cmd->add_option("--col-marginals", mwd.col_marginals, "CSV vector (default uniform)");
    mwd_cmd->add_option("--epsilon", mwd.epsilon, "Entropic strength")->capture_default_str();
    mwd_cmd->add_option("--tau", mwd.tau, "Stopping threshold")->capture_default_str();
    mwd_cmd->add_option("--max-iter", mwd.max_iter, "Iteration cap")->capture_default_str();
    mwd_cmd->add_flag("--normalize", mwd.normalize, "Max-normalize the cost first");
    mwd_cmd->add_flag("--emit-plan", mwd.emit_plan, "Include the plan in the report");
    mwd_cmd->add_flag("--oracle", mwd.oracle, "Cross-check against the exact solver");
    mwd_cmd->add_flag("--header", mwd.header, "Skip one header line in CSV inputs");
    mwd_cmd->add_option("--out", mwd.out, "Report path or 'stdout'")->capture_default_str();

    GtotArgs gtot;
    CLI::App* gtot_cmd =
        app.add_subcommand("gtot", "Vertex-alignment regularizer from graph + embeddings");
    gtot_cmd->set_version_flag("--version", kVersion);
    gtot_cmd->add_option("--graph", gtot.graph_path, "Graph JSON")->required();
    gtot_cmd->add_option("--source", gtot.source_path, "Source embedding CSV")->required();
    gtot_cmd->add_option("--target", gtot.target_path, "Target embedding CSV")->required();
    gtot_cmd->add_flag("--header", gtot.header, "Skip one header line in CSV inputs");
    gtot_cmd->add_option("--mask", gtot.mask, "ones|identity|graph")->capture_default_str();
    gtot_cmd->add_option("--power", gtot.power, "Adjacency power for --mask graph")
        ->capture_default_str();
    gtot_cmd->add_option("--epsilon", gtot.epsilon, "Entropic strength")->capture_default_str();
    gtot_cmd->add_option("--tau", gtot.tau, "Stopping threshold")->capture_default_str();
    gtot_cmd->add_option("--max-iter", gtot.max_iter, "Iteration cap")->capture_default_str();
    gtot_cmd->add_flag("--no-normalize", gtot.no_normalize, "Skip cost max-normalization");
    gtot_cmd->add_flag("--mgwd", gtot.mgwd, "Also compute the structure-drift value");
    gtot_cmd->add_option("--outer-iters", gtot.outer_iters, "Alternation rounds for --mgwd")
        ->capture_default_str();
    gtot_cmd->add_option("--lambda", gtot.lambda, "Weight for the combined penalty");
    gtot_cmd->add_option("--beta", gtot.beta, "Weight for the combined penalty");
    gtot_cmd->add_flag("--emit-plan", gtot.emit_plan, "Include the plan in the report");
    gtot_cmd->add_option("--out", gtot.out, "Report path or 'stdout'")->capture_default_str();

    DemoArgs demo;
    CLI::App* demo_cmd =
        app.add_subcommand("demo", "Fine-tune a toy message-passing network with the penalties");
    demo_cmd->set_version_flag("--version", kVersion);
    demo_cmd->add_option("--seed", demo.seed, "Dataset and init seed")->capture_default_str();
    demo_cmd->add_option("--lambda", demo.lambda, "Alignment penalty weight")
        ->capture_default_str();
    demo_cmd->add_option("--beta", demo.beta, "Structure penalty weight")->capture_default_str();
    demo_cmd->add_option("--epochs", demo.epochs, "Training epochs")->capture_default_str();
    demo_cmd->add_option("--lr", demo.lr, "Learning rate")->capture_default_str();
    demo_cmd->add_option("--out-history", demo.out_history, "Write per-epoch stats CSV here");
    demo_cmd->add_flag("--gradcheck", demo.gradcheck,
                       "Verify the analytic gradient before training");
    demo_cmd->add_option("--gradcheck-tol", demo.gradcheck_tol, "Gradient check tolerance")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (mwd_cmd->parsed())
            return run_mwd(mwd);
        if (gtot_cmd->parsed())
            return run_gtot(gtot);
        return run_demo(demo);
    } catch (const mot::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == mot::ErrorCode::Infeasible ? kExitInfeasible : kExitInputError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInputError;
    }
}
