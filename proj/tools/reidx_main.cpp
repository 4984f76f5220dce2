// Command-line front end: synthetic data generation, index building, batch
// querying, evaluation, projection fitting, and a brute-force-vs-indexed
// benchmark. Exit codes: 0 success, 2 usage error, 3 data format error,
// 4 internal error. REIDX_LOG={quiet,info,debug} controls stderr chatter.

#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <reidx/reidx.hpp>

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("REIDX_LOG");
    if (!env) return LogLevel::Info;
    const std::string v = env;
    if (v == "quiet") return LogLevel::Quiet;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "reidx: " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "reidx[debug]: " << msg << "\n";
}

struct GenSyntheticArgs {
    reidx::SyntheticSpec spec;
    std::string gallery_path;
    std::string queries_path;
};

int run_gen_synthetic(const GenSyntheticArgs& args) {
    const auto data = reidx::gen_synthetic(args.spec);
    reidx::write_gallery(args.gallery_path, data.gallery);
    reidx::write_queries(args.queries_path, data.queries);
    log_info("wrote " + std::to_string(data.gallery.size()) + " gallery samples (dim " +
             std::to_string(data.gallery.dim()) + ") to " + args.gallery_path + " and " +
             std::to_string(data.queries.queries.size()) + " queries to " +
             args.queries_path);
    return 0;
}

struct BuildIndexArgs {
    std::string gallery_path;
    double theta = 0.0;
    std::size_t pca_dim = 0;
    std::string fit_on = "groups";
    std::string out_path;
};

int run_build_index(const BuildIndexArgs& args) {
    const reidx::Gallery gallery = reidx::read_gallery(args.gallery_path);
    auto report = reidx::validate_gallery(gallery);
    if (!report.ok()) {
        for (const auto& issue : report.issues) std::cerr << "reidx: gallery: " << issue << "\n";
        throw reidx::FormatError("gallery failed validation with " +
                                 std::to_string(report.issues.size()) + " issue(s)");
    }
    const auto source = args.fit_on == "gallery" ? reidx::PcaFitSource::GalleryDescriptors
                                                 : reidx::PcaFitSource::GroupDescriptors;
    const reidx::GroupIndex index =
        reidx::build_index(gallery, args.theta, args.pca_dim, source);
    reidx::save_index(index, args.out_path);
    log_info("indexed " + std::to_string(gallery.size()) + " samples into " +
             std::to_string(index.group_count()) + " groups (theta " +
             std::to_string(args.theta) + ", reduced dim " + std::to_string(args.pca_dim) +
             ") -> " + args.out_path);
    if (index.pca.rank_deficient) {
        log_info("note: projection is rank deficient (fewer informative directions than "
                 "requested dimensions)");
    }
    return 0;
}

struct QueryArgs {
    std::string index_path;
    std::string gallery_path;
    std::string queries_path;
    std::string results_path;
    std::size_t topk_groups = reidx::kDefaultTopKGroups;
};

int run_query(const QueryArgs& args) {
    const reidx::Gallery gallery = reidx::read_gallery(args.gallery_path);
    const reidx::GroupIndex index = reidx::load_index(args.index_path, gallery);
    const reidx::QuerySet queries = reidx::read_queries(args.queries_path);
    if (queries.queries.empty()) throw reidx::FormatError("query batch is empty");

    std::vector<std::pair<reidx::SampleId, reidx::RankList>> results;
    results.reserve(queries.queries.size());
    reidx::StageTimes total;
    for (const auto& q : queries.queries) {
        auto r = reidx::retrieve(q, index, gallery, args.topk_groups);
        total.projection_ms += r.times.projection_ms;
        total.coarse_ms += r.times.coarse_ms;
        total.fine_ms += r.times.fine_ms;
        results.emplace_back(q.id, std::move(r.list));
    }
    reidx::write_results(args.results_path, results);
    const double n = static_cast<double>(results.size());
    log_info("ran " + std::to_string(results.size()) + " queries, mean " +
             std::to_string(total.total_ms() / n) + " ms (projection " +
             std::to_string(total.projection_ms / n) + ", coarse " +
             std::to_string(total.coarse_ms / n) + ", fine " +
             std::to_string(total.fine_ms / n) + ") -> " + args.results_path);
    return 0;
}

struct EvaluateArgs {
    std::string index_path;
    std::string gallery_path;
    std::string queries_path;
    std::string report_path;
    std::string kv_path;
    std::string cmc_csv_path;
    std::string mode = "coarse";
    std::size_t topk_groups = reidx::kDefaultTopKGroups;
    std::vector<std::size_t> ranks = {1, 5, 10, 20};
};

int run_evaluate(const EvaluateArgs& args) {
    const reidx::Gallery gallery = reidx::read_gallery(args.gallery_path);
    const reidx::QuerySet queries = reidx::read_queries(args.queries_path);
    reidx::EvalOptions options;
    options.top_k_groups = args.topk_groups;
    options.cmc_ranks = args.ranks;

    reidx::EvalReport report;
    if (args.mode == "brute") {
        report = reidx::evaluate_brute_force(queries, gallery, options);
    } else {
        const reidx::GroupIndex index = reidx::load_index(args.index_path, gallery);
        report = reidx::evaluate(queries, index, gallery, options);
    }

    reidx::write_report_text(args.report_path, report);
    if (!args.kv_path.empty()) reidx::write_report_kv(args.kv_path, report);
    if (!args.cmc_csv_path.empty()) reidx::write_cmc_csv(args.cmc_csv_path, report);
    log_info("evaluated " + std::to_string(report.evaluated) + " queries (skipped " +
             std::to_string(report.skipped) + "), mAP " + std::to_string(report.map) +
             " -> " + args.report_path);
    return 0;
}

struct PcaFitArgs {
    std::string gallery_path;
    std::size_t dim = 0;
    std::string out_path;
};

int run_pca_fit(const PcaFitArgs& args) {
    const reidx::Gallery gallery = reidx::read_gallery(args.gallery_path);
    if (gallery.empty()) throw reidx::FormatError("gallery is empty");
    const reidx::PcaModel model =
        reidx::pca_fit(gallery.descriptor(0).data(), gallery.size(), gallery.dim(), args.dim);
    reidx::write_pca_model(args.out_path, model);
    log_info("fit " + std::to_string(gallery.dim()) + " -> " + std::to_string(args.dim) +
             " projection on " + std::to_string(gallery.size()) + " samples -> " +
             args.out_path);
    return 0;
}

struct BenchArgs {
    std::string gallery_path;
    std::string queries_path;
    double theta = 0.0;
    std::size_t pca_dim = 0;
    std::size_t topk_groups = reidx::kDefaultTopKGroups;
    std::string kv_path;
};

int run_bench(const BenchArgs& args) {
    const reidx::Gallery gallery = reidx::read_gallery(args.gallery_path);
    const reidx::QuerySet queries = reidx::read_queries(args.queries_path);

    log_debug("building index");
    const reidx::GroupIndex index = reidx::build_index(gallery, args.theta, args.pca_dim);
    log_debug("index has " + std::to_string(index.group_count()) + " groups");

    reidx::EvalOptions options;
    options.top_k_groups = args.topk_groups;
    const reidx::EvalReport brute = reidx::evaluate_brute_force(queries, gallery, options);
    const reidx::EvalReport coarse = reidx::evaluate(queries, index, gallery, options);

    const double speedup = coarse.mean_total_ms() > 0.0
                               ? brute.mean_total_ms() / coarse.mean_total_ms()
                               : 0.0;
    std::cout << "samples: " << gallery.size() << "\n"
              << "groups: " << index.group_count() << " (theta " << args.theta << ")\n"
              << "queries: " << coarse.evaluated << "\n"
              << "brute force:    mAP " << brute.map << ", mean query " << brute.mean_total_ms()
              << " ms\n"
              << "coarse-to-fine: mAP " << coarse.map << ", mean query "
              << coarse.mean_total_ms() << " ms (projection " << coarse.mean_projection_ms
              << ", coarse " << coarse.mean_coarse_ms << ", fine " << coarse.mean_fine_ms
              << ")\n"
              << "speedup: " << speedup << "x\n";
    if (!args.kv_path.empty()) {
        reidx::detail::write_file_atomic(args.kv_path, [&](std::ostream& out) {
            out << "samples=" << gallery.size() << "\n";
            out << "groups=" << index.group_count() << "\n";
            out << "map_brute=" << brute.map << "\n";
            out << "map_coarse_to_fine=" << coarse.map << "\n";
            out << "mean_ms_brute=" << brute.mean_total_ms() << "\n";
            out << "mean_ms_coarse_to_fine=" << coarse.mean_total_ms() << "\n";
            out << "speedup=" << speedup << "\n";
        });
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical pedestrian retrieval engine"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI file");

    GenSyntheticArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "generate a labeled synthetic gallery");
    gen_cmd->add_option("--identities", gen.spec.identities, "number of identities")->required();
    gen_cmd->add_option("--samples", gen.spec.samples_per_identity, "samples per identity")
        ->required();
    gen_cmd->add_option("--dim", gen.spec.dim, "descriptor dimension")->required();
    gen_cmd->add_option("--within-std", gen.spec.within_std, "within-identity spread")
        ->required();
    gen_cmd->add_option("--between-std", gen.spec.between_std, "between-identity spread")
        ->required();
    gen_cmd->add_option("--seed", gen.spec.seed, "random seed")->default_val(1);
    gen_cmd->add_option("--gallery", gen.gallery_path, "output gallery file")->required();
    gen_cmd->add_option("--queries", gen.queries_path, "output query batch file")->required();

    BuildIndexArgs build;
    auto* build_cmd = app.add_subcommand("build-index", "group a gallery and fit the projection");
    build_cmd->add_option("--gallery", build.gallery_path, "input gallery file")->required();
    build_cmd->add_option("--theta", build.theta, "dissimilarity threshold")
        ->required()
        ->check(CLI::NonNegativeNumber);
    build_cmd->add_option("--pca-dim", build.pca_dim, "reduced dimension for coarse search")
        ->required();
    build_cmd->add_option("--pca-fit-on", build.fit_on, "projection fitting set")
        ->check(CLI::IsMember({"groups", "gallery"}))
        ->default_val("groups");
    build_cmd->add_option("--out", build.out_path, "output index manifest path")->required();

    QueryArgs query;
    auto* query_cmd = app.add_subcommand("query", "run a query batch against an index");
    query_cmd->add_option("--index", query.index_path, "index manifest")->required();
    query_cmd->add_option("--gallery", query.gallery_path, "gallery the index was built from")
        ->required();
    query_cmd->add_option("--queries", query.queries_path, "query batch file")->required();
    query_cmd->add_option("--results", query.results_path, "output results file")->required();
    query_cmd->add_option("--topk-groups", query.topk_groups, "groups kept by coarse stage")
        ->default_val(reidx::kDefaultTopKGroups);

    EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "score a labeled query batch");
    eval_cmd->add_option("--index", eval.index_path, "index manifest (coarse mode)");
    eval_cmd->add_option("--gallery", eval.gallery_path, "labeled gallery file")->required();
    eval_cmd->add_option("--queries", eval.queries_path, "labeled query batch")->required();
    eval_cmd->add_option("--report", eval.report_path, "output report (text)")->required();
    eval_cmd->add_option("--kv", eval.kv_path, "also write machine-readable key=value report");
    eval_cmd->add_option("--cmc-csv", eval.cmc_csv_path, "also write CMC curve CSV");
    eval_cmd->add_option("--mode", eval.mode, "retrieval mode")
        ->check(CLI::IsMember({"coarse", "brute"}))
        ->default_val("coarse");
    eval_cmd->add_option("--topk-groups", eval.topk_groups, "groups kept by coarse stage")
        ->default_val(reidx::kDefaultTopKGroups);
    eval_cmd->add_option("--ranks", eval.ranks, "CMC ranks to report")->delimiter(',');

    PcaFitArgs pca;
    auto* pca_cmd = app.add_subcommand("pca-fit", "fit a projection on a gallery");
    pca_cmd->add_option("--gallery", pca.gallery_path, "input gallery file")->required();
    pca_cmd->add_option("--dim", pca.dim, "output dimension")->required();
    pca_cmd->add_option("--out", pca.out_path, "output model file")->required();

    BenchArgs bench;
    auto* bench_cmd =
        app.add_subcommand("bench", "compare brute force and coarse-to-fine on one dataset");
    bench_cmd->add_option("--gallery", bench.gallery_path, "labeled gallery file")->required();
    bench_cmd->add_option("--queries", bench.queries_path, "labeled query batch")->required();
    bench_cmd->add_option("--theta", bench.theta, "dissimilarity threshold")
        ->required()
        ->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--pca-dim", bench.pca_dim, "reduced dimension")->required();
    bench_cmd->add_option("--topk-groups", bench.topk_groups, "groups kept by coarse stage")
        ->default_val(reidx::kDefaultTopKGroups);
    bench_cmd->add_option("--kv", bench.kv_path, "also write key=value summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (eval_cmd->parsed() && eval.mode == "coarse" && eval.index_path.empty()) {
            std::cerr << "reidx: evaluate --mode coarse requires --index\n";
            return 2;
        }
        if (gen_cmd->parsed()) return run_gen_synthetic(gen);
        if (build_cmd->parsed()) return run_build_index(build);
        if (query_cmd->parsed()) return run_query(query);
        if (eval_cmd->parsed()) return run_evaluate(eval);
        if (pca_cmd->parsed()) return run_pca_fit(pca);
        if (bench_cmd->parsed()) return run_bench(bench);
        std::cerr << "reidx: no command\n";
        return 2;
    } catch (const reidx::FormatError& e) {
        std::cerr << "reidx: data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "reidx: error: " << e.what() << "\n";
        return 4;
    }
}
