#include "tid/run.hpp"

#include "tid/coreid.hpp"
#include "tid/error.hpp"
#include "tid/io.hpp"
#include "tid/matrix_id.hpp"
#include "tid/satid.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <variant>

namespace tid {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

using InputTensor = std::variant<DenseTensor, SparseTensorCoo, CpTensor>;

InputTensor load_input(const RunConfig& cfg) {
    if (cfg.format == "frostt") {
        SparseTensorCoo t = parse_frostt(cfg.input,
                                         cfg.shapeOverride.empty() ? nullptr : &cfg.shapeOverride);
        if (!cfg.subsampleStrides.empty() || !cfg.contractModes.empty()) {
            std::vector<Index> strides = cfg.subsampleStrides;
            if (strides.empty()) strides.assign(static_cast<std::size_t>(t.order()), 1);
            if (cfg.contractFirst) {
                t = subsample_sparse(t, std::vector<Index>(static_cast<std::size_t>(t.order()), 1),
                                     cfg.contractModes);
                std::vector<Index> kept;
                std::vector<bool> drop(strides.size(), false);
                for (Index m : cfg.contractModes) drop[static_cast<std::size_t>(m)] = true;
                for (std::size_t j = 0; j < strides.size(); ++j)
                    if (!drop[j]) kept.push_back(strides[j]);
                t = subsample_sparse(t, kept);
            } else {
                t = subsample_sparse(t, strides, cfg.contractModes);
            }
        }
        return t;
    }
    if (cfg.format == "dense") return read_dense_text(cfg.input);
    if (cfg.format == "cp") return load_cp_factors(cfg.input);
    throw std::invalid_argument("unknown input format: " + cfg.format);
}

Shape input_shape(const InputTensor& in) {
    return std::visit(
        [](const auto& t) -> Shape {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, CpTensor>)
                return t.dims();
            else
                return t.shape;
        },
        in);
}

void write_indices_coreid(const fs::path& dir, const std::vector<std::vector<Index>>& sets) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
        std::ofstream out(dir / ("indices_mode" + std::to_string(i + 1) + ".txt"));
        for (Index idx : sets[i]) out << idx << '\n';
    }
}

void write_indices_satid(const fs::path& dir, const std::vector<std::vector<MultiIndex>>& sets) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
        std::ofstream out(dir / ("indices_mode" + std::to_string(i + 1) + ".txt"));
        for (const MultiIndex& b : sets[i]) {
            for (std::size_t j = 0; j < b.size(); ++j) out << b[j] << (j + 1 < b.size() ? " " : "");
            out << '\n';
        }
    }
}

void write_satellites(const fs::path& dir, const std::vector<Eigen::MatrixXd>& sats) {
    for (std::size_t i = 0; i < sats.size(); ++i)
        write_matrix_text(dir / ("satellite_mode" + std::to_string(i + 1) + ".txt"), sats[i]);
}

std::string write_core(const fs::path& dir, const TuckerApprox& approx) {
    if (std::holds_alternative<DenseTensor>(approx.core)) {
        write_dense_text(dir / "core_dense.txt", std::get<DenseTensor>(approx.core));
        return "dense";
    }
    if (std::holds_alternative<SparseTensorCoo>(approx.core)) {
        write_tns(dir / "core.tns", std::get<SparseTensorCoo>(approx.core));
        return "sparse";
    }
    save_cp_factors(dir / "core_cp", std::get<CpTensor>(approx.core));
    return "cp";
}

TuckerApprox load_approx(const fs::path& dir, const Shape& fullShape) {
    TuckerApprox approx;
    for (std::size_t i = 0; i < fullShape.size(); ++i) {
        fs::path f = dir / ("satellite_mode" + std::to_string(i + 1) + ".txt");
        approx.satellites.push_back(read_matrix_text(f));
        if (approx.satellites.back().rows() != fullShape[i])
            throw std::invalid_argument("satellite rows do not match input shape");
    }
    if (fs::exists(dir / "core_dense.txt")) {
        approx.core = read_dense_text(dir / "core_dense.txt");
    } else if (fs::exists(dir / "core.tns")) {
        Shape coreShape(approx.satellites.size());
        for (std::size_t i = 0; i < approx.satellites.size(); ++i)
            coreShape[i] = approx.satellites[i].cols();
        approx.core = parse_frostt(dir / "core.tns", &coreShape);
    } else if (fs::exists(dir / "core_cp")) {
        approx.core = load_cp_factors(dir / "core_cp");
    } else {
        throw std::invalid_argument("no core artifact found in " + dir.string());
    }
    return approx;
}

ErrorReport compute_error(const InputTensor& in, const TuckerApprox& approx, Index estimateDim,
                          std::uint64_t seed) {
    if (estimateDim > 0 && std::holds_alternative<SparseTensorCoo>(in))
        return sketched_rel_error(std::get<SparseTensorCoo>(in), approx, estimateDim, seed);
    return std::visit([&](const auto& t) { return exact_rel_error(t, approx); }, in);
}

json error_json(const ErrorReport& rep) {
    return json{{"relative", rep.relativeError},
                {"absolute", rep.absoluteError},
                {"method", rep.method}};
}

json shape_json(const Shape& s) { return json(s); }

}  // namespace

int run(const RunConfig& cfg) {
    const fs::path outDir(cfg.outDir);
    try {
        if (cfg.task.empty() || cfg.outDir.empty())
            throw std::invalid_argument("task and output directory are required");
        fs::create_directories(outDir);

        json summary;
        summary["schema"] = 1;
        summary["task"] = cfg.task;
        summary["method"] = cfg.method;
        summary["seed"] = cfg.seed;
        json timings;

        auto t0 = Clock::now();
        InputTensor input = load_input(cfg);
        timings["load"] = seconds_since(t0);
        const Shape shape = input_shape(input);
        summary["shape"] = shape_json(shape);

        MethodChoice mc;
        auto parsed = method_from_name(cfg.method);
        if (!parsed) throw std::invalid_argument("unknown method: " + cfg.method);
        mc.method = *parsed;
        mc.tolerance = cfg.tolerance;
        mc.rngSeed = cfg.seed;

        std::vector<Index> ranks = cfg.ranks;
        if (cfg.task != "error" && ranks.empty())
            throw std::invalid_argument("--rank is required for this task");

        TuckerApprox approx;
        t0 = Clock::now();
        if (cfg.task == "coreid") {
            CoreIdResult res;
            json sketchInfo;
            if (std::holds_alternative<DenseTensor>(input)) {
                SketchConfig sk = SketchConfig::none();
                if (cfg.sketchM >= 0) {
                    sk = cfg.sketchKind == "srht" ? SketchConfig::srht(cfg.sketchM)
                                                  : SketchConfig::gaussian(cfg.sketchM);
                    sketchInfo = {{"kind", cfg.sketchKind}, {"m", cfg.sketchM}};
                }
                res = coreid_dense(std::get<DenseTensor>(input), ranks, mc, sk, cfg.modeOrder);
                approx = coreid_reconstruct(std::get<DenseTensor>(input), res);
            } else if (std::holds_alternative<CpTensor>(input)) {
                const Index m = cfg.sketchM < 0 ? 0 : cfg.sketchM;
                const CpSketchFamily fam = cfg.cpFamily == "tensorsketch"
                                               ? CpSketchFamily::TensorSketch
                                               : CpSketchFamily::Kfjlt;
                res = coreid_cp(std::get<CpTensor>(input), ranks, mc, m, fam, cfg.modeOrder);
                approx = coreid_reconstruct(std::get<CpTensor>(input), res);
                sketchInfo = {{"family", cfg.cpFamily}, {"m", m}};
            } else {
                res = coreid_sparse(std::get<SparseTensorCoo>(input), ranks, mc, cfg.netDims,
                                    cfg.modeOrder);
                approx = coreid_reconstruct(std::get<SparseTensorCoo>(input), res);
                sketchInfo = {{"m1", cfg.netDims.m1}, {"m2", cfg.netDims.m2}, {"m3", cfg.netDims.m3}};
            }
            timings["decompose"] = seconds_since(t0);
            summary["sketch"] = sketchInfo;
            summary["modeOrder"] = json(res.modeOrder);
            summary["realizedRanks"] = json(res.realized_ranks());
            write_indices_coreid(outDir, res.indexSets);
        } else if (cfg.task == "satid") {
            SatIdResult res;
            if (std::holds_alternative<DenseTensor>(input)) {
                res = satid_generic(std::get<DenseTensor>(input), ranks, mc);
            } else if (std::holds_alternative<CpTensor>(input)) {
                if (mc.method != Method::NormSample)
                    throw std::invalid_argument("satid on CP input uses norm sampling");
                const Index m = cfg.sketchM < 0 ? 0 : cfg.sketchM;
                res = satid_cp(std::get<CpTensor>(input), ranks, m, cfg.seed);
                summary["sketch"] = {{"m", m}};
            } else {
                const Index m = cfg.sketchM < 0 ? 0 : cfg.sketchM;
                res = satid_sparse(std::get<SparseTensorCoo>(input), ranks, mc, m);
                summary["sketch"] = {{"m", m}};
            }
            timings["decompose"] = seconds_since(t0);
            std::vector<Index> realized(res.indexSets.size());
            for (std::size_t i = 0; i < res.indexSets.size(); ++i)
                realized[i] = static_cast<Index>(res.indexSets[i].size());
            summary["realizedRanks"] = json(realized);
            write_indices_satid(outDir, res.indexSets);
            approx.satellites = res.satellites;
            if (std::holds_alternative<DenseTensor>(res.core))
                approx.core = std::get<DenseTensor>(res.core);
            else
                approx.core = std::get<CpTensor>(res.core);
        } else if (cfg.task == "hosvd") {
            DenseTensor dense = std::visit(
                [](const auto& t) -> DenseTensor {
                    using T = std::decay_t<decltype(t)>;
                    if constexpr (std::is_same_v<T, DenseTensor>)
                        return t;
                    else if constexpr (std::is_same_v<T, SparseTensorCoo>)
                        return sparse_to_dense(t);
                    else
                        return cp_materialize(t);
                },
                input);
            approx = hosvd_baseline(dense, ranks);
            timings["decompose"] = seconds_since(t0);
        } else if (cfg.task == "error") {
            if (cfg.approxDir.empty()) throw std::invalid_argument("--approx is required");
            approx = load_approx(cfg.approxDir, shape);
            timings["decompose"] = 0.0;
        } else {
            throw std::invalid_argument("unknown task: " + cfg.task);
        }

        if (cfg.task != "error") {
            write_satellites(outDir, approx.satellites);
            summary["core"] = write_core(outDir, approx);
            summary["ranks"] = json(ranks);
        }

        t0 = Clock::now();
        ErrorReport rep = compute_error(input, approx, cfg.estimateErrorDim, cfg.seed);
        timings["error"] = seconds_since(t0);
        summary["error"] = error_json(rep);
        summary["timings"] = timings;

        std::ofstream out(outDir / "summary.json");
        out << summary.dump(2) << '\n';
        std::cout << summary.dump(2) << std::endl;
        return 0;
    } catch (const std::exception& e) {
        json err{{"error", e.what()}, {"task", cfg.task}};
        std::error_code ec;
        fs::create_directories(outDir, ec);
        if (!ec) {
            std::ofstream out(outDir / "error.json");
            out << err.dump(2) << '\n';
        }
        std::cerr << err.dump(2) << std::endl;
        return 1;
    }
}

}  // namespace tid
