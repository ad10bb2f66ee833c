#pragma once
//
// Benchmark worlds: anti-podal circle, Y-corridor evacuation, museum and
// tradeshow. Each builder is a pure function of its arguments and seed.
//

#include "spa/world.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spa {

struct Scenario {
    std::shared_ptr<const DomainSpec> spec;
    std::shared_ptr<const Lexicon> lexicon;
    SimConfig config;  // from the domain spec, seed filled in
    std::uint64_t max_ticks = 6000;

    /// Parser trained once on this scenario's lexicon, shared by every world.
    std::shared_ptr<const Parser> parser() const;
    std::unique_ptr<World> make_world(bool nli) const;

private:
    mutable std::shared_ptr<const Parser> parser_;
};

/// Directory holding the shipped lexicons (SPA_DATA_DIR overrides).
std::string data_dir();

/// Spots default to one per object; more spots leave some empty.
Scenario build_antipodal_circle(std::size_t n_agents, std::size_t n_objects, std::uint64_t seed,
                                std::size_t desires_per_agent = 3, std::size_t n_spots = 0);
Scenario build_evacuation(std::uint64_t seed, std::size_t evacuees = 10);
Scenario build_museum(std::uint64_t seed);
Scenario build_tradeshow(std::uint64_t seed);

const std::vector<std::string>& scenario_names();
/// Paper-scale build by name; nullopt for an unknown name.
std::optional<Scenario> build_scenario(const std::string& name, std::uint64_t seed);

/// Copy of `base` with avatar agents Avatar_1..Avatar_count standing where
/// the first agent starts.
Scenario with_avatars(const Scenario& base, std::size_t count);

}  // namespace spa
