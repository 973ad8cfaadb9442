#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tid/sketch.hpp"
#include "tid/tensor.hpp"

namespace tid {

/// CLI-level configuration; numeric fields are 0-based already.
struct RunConfig {
    std::string task;    // coreid | satid | hosvd | error
    std::string input;
    std::string format;  // frostt | dense | cp
    Shape shapeOverride;
    std::vector<Index> ranks;
    std::string method = "normmax";
    double tolerance = 1e-12;

    Index sketchM = -1;       // -1 unset, 0 exact path, >0 sketch dimension
    SparseNetDims netDims;    // sparse coreid network dims
    bool netDimsSet = false;
    std::string sketchKind = "gaussian";  // dense coreid: gaussian | srht
    std::string cpFamily = "kfjlt";       // cp coreid: kfjlt | tensorsketch

    std::vector<Index> modeOrder;
    std::uint64_t seed = 0;
    std::string outDir;
    Index estimateErrorDim = 0;  // 0 = exact

    std::vector<Index> subsampleStrides;
    std::vector<Index> contractModes;
    bool contractFirst = false;

    std::string approxDir;  // error task: decomposition artifacts to evaluate
};

/// Execute a task and write artifacts plus summary.json into outDir.
/// Returns the process exit code; failures also write error.json.
int run(const RunConfig& cfg);

}  // namespace tid
