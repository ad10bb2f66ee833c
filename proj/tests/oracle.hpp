#pragma once
// Test-only reference implementations used to check the library.

#include "spa/planner.hpp"

#include <memory>
#include <optional>
#include <random>
#include <vector>

namespace spa::ref {

std::shared_ptr<DomainSpec> load_data_domain(const std::string& file);

/// Forward breadth-first search over belief states using the same
/// acceptability rules as the planner (TRUE always; UNKNOWN only for knowledge
/// predicates and for fluents no action produces). Returns the plan length,
/// nullopt when no plan exists, or -1 when the state cap was hit.
std::optional<int> forward_search(const BeliefState& beliefs, const std::vector<Literal>& desires,
                                  std::span<const ActionSchema> actions, std::size_t state_cap = 200000);

struct MicroProblem {
    std::shared_ptr<DomainSpec> spec;
    std::unique_ptr<BeliefState> beliefs;
    std::vector<Literal> desires;
};

/// Random domain with at most 6 entities, 3 predicate schemas and 2 action schemas.
MicroProblem random_micro_problem(std::mt19937_64& rng);

}  // namespace spa::ref
