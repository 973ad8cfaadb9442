#include <CLI11.hpp>

#include "tid/io.hpp"
#include "tid/run.hpp"
#include "tid/synthetic.hpp"

#include <iostream>
#include <map>
#include <sstream>

namespace {

std::vector<tid::Index> parse_index_list(const std::string& s) {
    std::vector<tid::Index> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoll(tok));
    }
    return out;
}

/// "--sketch m=128" or "--sketch m1=400,m2=400,m3=2000"
void parse_sketch_spec(const std::string& s, tid::RunConfig& cfg) {
    std::stringstream ss(s);
    std::string tok;
    std::map<std::string, tid::Index> kv;
    while (std::getline(ss, tok, ',')) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--sketch expects key=value pairs");
        kv[tok.substr(0, eq)] = std::stoll(tok.substr(eq + 1));
    }
    if (kv.count("m")) cfg.sketchM = kv["m"];
    if (kv.count("m1") || kv.count("m2") || kv.count("m3")) {
        if (kv.count("m1")) cfg.netDims.m1 = kv["m1"];
        if (kv.count("m2")) cfg.netDims.m2 = kv["m2"];
        if (kv.count("m3")) cfg.netDims.m3 = kv["m3"];
        cfg.netDimsSet = true;
    }
}

void add_task_options(CLI::App* app, tid::RunConfig& cfg, std::string& rankSpec,
                      std::string& shapeSpec, std::string& sketchSpec, std::string& orderSpec,
                      std::string& subsampleSpec, std::string& contractSpec, bool needRanks) {
    app->add_option("--input", cfg.input, "input path")->required();
    app->add_option("--format", cfg.format, "frostt | dense | cp")->required();
    app->add_option("--shape", shapeSpec, "shape override a,b,c (frostt)");
    if (needRanks) app->add_option("--rank", rankSpec, "target ranks k1,k2,...")->required();
    app->add_option("--method", cfg.method, "normmax | normsample | nuclear | uniform");
    app->add_option("--tol", cfg.tolerance, "relative stopping tolerance");
    app->add_option("--sketch", sketchSpec, "m=.. or m1=..,m2=..,m3=..");
    app->add_option("--sketch-kind", cfg.sketchKind, "dense sketch: gaussian | srht");
    app->add_option("--cp-family", cfg.cpFamily, "cp sketch: kfjlt | tensorsketch");
    app->add_option("--mode-order", orderSpec, "processing order, 1-based, e.g. 3,1,2");
    app->add_option("--seed", cfg.seed, "random seed")->required();
    app->add_option("--out", cfg.outDir, "output directory")->required();
    app->add_option("--estimate-error", cfg.estimateErrorDim, "sketch dim for error estimate (0 = exact)");
    app->add_option("--subsample", subsampleSpec, "strides s1,s2,... applied to frostt input");
    app->add_option("--contract-modes", contractSpec, "1-based modes summed out after subsampling");
    app->add_flag("--contract-first", cfg.contractFirst, "contract listed modes before subsampling");
}

void finalize_config(tid::RunConfig& cfg, const std::string& rankSpec, const std::string& shapeSpec,
                     const std::string& sketchSpec, const std::string& orderSpec,
                     const std::string& subsampleSpec, const std::string& contractSpec) {
    if (!rankSpec.empty()) cfg.ranks = parse_index_list(rankSpec);
    if (!shapeSpec.empty()) cfg.shapeOverride = parse_index_list(shapeSpec);
    if (!sketchSpec.empty()) parse_sketch_spec(sketchSpec, cfg);
    if (!orderSpec.empty()) {
        cfg.modeOrder = parse_index_list(orderSpec);
        for (auto& m : cfg.modeOrder) --m;  // CLI is 1-based
    }
    if (!subsampleSpec.empty()) cfg.subsampleStrides = parse_index_list(subsampleSpec);
    if (!contractSpec.empty()) {
        cfg.contractModes = parse_index_list(contractSpec);
        for (auto& m : cfg.contractModes) --m;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensorid: core and satellite interpolative tensor decompositions"};
    app.require_subcommand(1);

    tid::RunConfig cfg;
    std::string rankSpec, shapeSpec, sketchSpec, orderSpec, subsampleSpec, contractSpec;

    CLI::App* coreid = app.add_subcommand("coreid", "core interpolative decomposition");
    add_task_options(coreid, cfg, rankSpec, shapeSpec, sketchSpec, orderSpec, subsampleSpec,
                     contractSpec, true);
    CLI::App* satid = app.add_subcommand("satid", "satellite interpolative decomposition");
    add_task_options(satid, cfg, rankSpec, shapeSpec, sketchSpec, orderSpec, subsampleSpec,
                     contractSpec, true);
    CLI::App* hosvd = app.add_subcommand("hosvd", "sequentially truncated HOSVD baseline");
    add_task_options(hosvd, cfg, rankSpec, shapeSpec, sketchSpec, orderSpec, subsampleSpec,
                     contractSpec, true);

    CLI::App* error = app.add_subcommand("error", "evaluate a stored decomposition");
    add_task_options(error, cfg, rankSpec, shapeSpec, sketchSpec, orderSpec, subsampleSpec,
                     contractSpec, false);
    error->add_option("--approx", cfg.approxDir, "decomposition directory")->required();

    // generators for desk-scale experiment inputs
    CLI::App* gen = app.add_subcommand("gen", "write synthetic inputs");
    std::string genKind, genOut;
    tid::SyntheticCpConfig synthCfg;
    tid::Index ceN = 64;
    double ceM = 100.0;
    std::string lrShapeSpec, lrRankSpec;
    std::uint64_t genSeed = 0;
    gen->add_option("--kind", genKind, "synth-cp | counterexample | lowrank")->required();
    gen->add_option("--out", genOut, "output path")->required();
    gen->add_option("--seed", genSeed, "random seed");
    gen->add_option("--n", synthCfg.n, "per-mode extent");
    gen->add_option("--p", synthCfg.p, "rank-one terms");
    gen->add_option("--r", synthCfg.r, "mixture components");
    gen->add_option("--sigma", synthCfg.sigma, "component standard deviation");
    gen->add_option("--zero-row-frac", synthCfg.zeroRowFrac, "fraction of zeroed rows");
    gen->add_option("--d", synthCfg.d, "tensor order");
    gen->add_option("--noise-frac", synthCfg.noiseFrac, "fraction of pure-noise terms");
    gen->add_option("--ce-n", ceN, "counterexample size");
    gen->add_option("--ce-m", ceM, "counterexample magnitude");
    gen->add_option("--lr-shape", lrShapeSpec, "low-rank tensor shape a,b,c");
    gen->add_option("--lr-rank", lrRankSpec, "low-rank tensor multilinear rank");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (genKind == "synth-cp") {
                synthCfg.seed = genSeed;
                tid::save_cp_factors(genOut, tid::gen_synthetic_cp(synthCfg));
            } else if (genKind == "counterexample") {
                tid::write_matrix_text(genOut, tid::gen_counterexample_matrix(ceN, ceM));
            } else if (genKind == "lowrank") {
                tid::Rng rng{genSeed};
                tid::DenseTensor t = tid::gen_low_rank_dense(parse_index_list(lrShapeSpec),
                                                             parse_index_list(lrRankSpec), rng);
                tid::write_dense_text(genOut, t);
            } else {
                std::cerr << "unknown generator kind: " << genKind << "\n";
                return 1;
            }
            return 0;
        }

        finalize_config(cfg, rankSpec, shapeSpec, sketchSpec, orderSpec, subsampleSpec, contractSpec);
        if (coreid->parsed()) cfg.task = "coreid";
        if (satid->parsed()) cfg.task = "satid";
        if (hosvd->parsed()) cfg.task = "hosvd";
        if (error->parsed()) cfg.task = "error";
        return tid::run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
