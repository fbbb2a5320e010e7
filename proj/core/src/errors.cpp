#include "hcr/errors.hpp"

namespace hcr {

const char* errc_name(errc code) noexcept {
    switch (code) {
        case errc::config: return "config error";
        case errc::unsupported_degree: return "unsupported degree";
        case errc::io: return "io error";
        case errc::insufficient_data: return "insufficient data";
        case errc::domain: return "domain error";
        case errc::degenerate_scale: return "degenerate scale";
        case errc::misaligned_panel: return "misaligned panel";
        case errc::shape_mismatch: return "shape mismatch";
        case errc::degenerate_context: return "degenerate context";
        case errc::fit_failure: return "fit failure";
        case errc::rank_deficient: return "rank deficient";
        case errc::contract: return "contract violation";
        case errc::numeric: return "numeric failure";
    }
    return "error";
}

}  // namespace hcr
