#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sdpot/constraint.hpp"

namespace sdpot {

// Parameter record for one constraint family.  Unused parameters are
// ignored by families that do not need them; s_lo/s_hi override the
// family's default working weight interval when both are set.
struct CatalogEntry {
    std::string id = "ot-cost";
    std::string cost = "quadratic";  // ot-cost: quadratic | log-reflector | log-refractor
    int dim = 2;                     // source chart dimension n in {1,2}
    double kappa = 2.0 / 3.0;        // refraction ratio; >1 selects the reversed-index variant
    double plane_height = 1.0;       // target plane height for lifted point-source targets
    double delta0 = 0.1;             // source/target angular separation margin
    double tau = 0.1;                // refractor angular margin
    double delta = 0.9;              // parallel-refractor aperture factor
    double s_lo = 0.0, s_hi = 0.0;   // working weight interval (both 0 -> default)
};

// The seven shipped identifiers:
//   ot-cost               transport cost on a plane or sphere chart
//   reflector-ff          far-field reflector cost
//   refractor-ff          far-field refractor cost (kappa below or above 1)
//   reflector-nf-point    near-field point-source reflector (supporting ellipsoids)
//   reflector-nf-parallel near-field parallel-beam reflector (supporting paraboloids)
//   refractor-nf-point    near-field point-source refractor (Cartesian ovals)
//   refractor-nf-parallel near-field parallel-beam refractor (inverse ellipsoids)
std::vector<std::string> catalog_ids();

CatalogEntry default_entry(const std::string& id);

// Builds the family for an entry.  Also accepts the test fixture id
// "test-broken-derivative" (a quadratic cost with a deliberately wrong
// gradient) used to exercise failure paths.
std::unique_ptr<ConstraintFamily> make_family(const CatalogEntry& entry);

}  // namespace sdpot
