#pragma once

// Owning wrappers for the C library handles and status checking.

#include <cellwise/cellwise.h>

#include <memory>
#include <string>

#include "table_io.hpp"

namespace cli {

struct ModelDeleter {
    void operator()(cw_model* m) const { cw_model_free(m); }
};
struct CellsDeleter {
    void operator()(cw_cells* c) const { cw_cells_free(c); }
};
struct FitDeleter {
    void operator()(cw_fit* f) const { cw_fit_free(f); }
};
struct SimDeleter {
    void operator()(cw_sim* s) const { cw_sim_free(s); }
};

using ModelPtr = std::unique_ptr<cw_model, ModelDeleter>;
using CellsPtr = std::unique_ptr<cw_cells, CellsDeleter>;
using FitPtr = std::unique_ptr<cw_fit, FitDeleter>;
using SimPtr = std::unique_ptr<cw_sim, SimDeleter>;

inline int exit_code(cw_status s) {
    switch (s) {
        case CW_OK: return 0;
        case CW_ERR_INPUT:
        case CW_ERR_SPARSITY: return kExitInput;
        case CW_ERR_SHAPE:
        case CW_ERR_SINGULAR: return kExitShape;
        case CW_ERR_CONVERGENCE: return kExitConvergence;
        default: return 1;
    }
}

inline void check(cw_status s, const std::string& context) {
    if (s != CW_OK) throw Failure(exit_code(s), context + ": " + cw_last_error());
}

}  // namespace cli
