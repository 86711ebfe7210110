#pragma once

#include <optional>
#include <vector>

#include "fipp/market_model.hpp"

namespace fipp {

enum class ConstraintKind { Box, Ball, Halfspaces, SingletonOrigin, Simplex };

// Admissible-strategy constraint set C in R^n. All variants contain the origin;
// only Halfspaces can be unbounded and then only with allow_unbounded set.
struct ConstraintSet {
    ConstraintKind kind = ConstraintKind::SingletonOrigin;
    int n = 0;

    Vec lo, hi;        // Box
    Vec center;        // Ball
    double radius = 0; // Ball
    Mat A;             // Halfspaces: A pi <= b_rhs
    Vec b_rhs;
    bool allow_unbounded = false;
    double scale = 1.0; // Simplex: {pi >= 0, sum pi <= scale}

    static ConstraintSet box(const Vec& lo, const Vec& hi);
    static ConstraintSet ball(const Vec& center, double radius);
    static ConstraintSet halfspaces(const Mat& A, const Vec& b, bool allow_unbounded = false);
    static ConstraintSet singleton_origin(int n);
    static ConstraintSet simplex(int n, double scale);
};

// throws std::invalid_argument unless the set is well-formed, contains 0, and
// is bounded (or explicitly allowed not to be)
void validate_constraint(const ConstraintSet& C);

bool constraint_is_bounded(const ConstraintSet& C);
bool constraint_is_polyhedral(const ConstraintSet& C);

// Euclidean projection onto C; exact per variant (the Halfspaces case solves
// the nearest-point problem by active-set enumeration, feasible for the small
// constraint counts used here).
Vec project(const ConstraintSet& C, const Vec& x);

bool contains(const ConstraintSet& C, const Vec& x, double tol = 1e-10);

// Market data frozen at one evaluation point, already tilt-adjusted: drift
// b^{M,R}, diffusion c^R and the R-marginal atoms under the tilted measure.
struct LocalCharacteristics {
    Vec b;
    Mat cR;
    struct MAtom {
        Vec u;
        double rate;
    };
    std::vector<MAtom> atoms;
    double truncation_radius = 1.0;
};

// budget constraint 1 + pi'u >= 0 against every atom (ties feasible)
bool budget_feasible(const LocalCharacteristics& ch, const Vec& pi);

// recession function of the concave objective: pi'(h*F - b) on the directions
// killed by the diffusion and unexposed to downside jumps, +infinity otherwise
double recession_function(const LocalCharacteristics& ch, const Vec& pi);

bool recession_cone_member(const LocalCharacteristics& ch, const Vec& pi);

// null-investment space N: c^R pi = 0, pi'u = 0 on every atom, pi'b = 0
bool null_investment_member(const LocalCharacteristics& ch, const Vec& pi);

// Generators of the polyhedral cone {x : A x <= 0}: a basis of its lineality
// space plus the extreme rays of the pointed remainder (unit norm).
struct ConeGenerators {
    std::vector<Vec> lineality;
    std::vector<Vec> rays;
};
ConeGenerators cone_generators(const Mat& A, int n);

// recession cone of C as an inequality system {A x <= 0}
Mat constraint_recession_rows(const ConstraintSet& C);

enum class Attainment { Attained, AttainedPolyhedral, Inconclusive };

struct AttainmentResult {
    Attainment status = Attainment::Attained;
    std::optional<Vec> witness; // unit-norm candidate immediate-arbitrage direction
};

// Decides attainment of sup Phi over C: compact C is immediate; otherwise the
// generators of {recession cone of C} ∩ {recession cone of the objective} are
// enumerated — empty means attained, all inside N means attained with the
// polyhedral argument, and any generator outside N is returned as the witness.
AttainmentResult attainment_check(const LocalCharacteristics& ch, const ConstraintSet& C);

} // namespace fipp
