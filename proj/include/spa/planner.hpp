#pragma once
//
// Two-stage planning under incomplete information.
//
// Stage 1 runs a least-commitment backward (regression) search from the
// desires. Action parameters not fixed by the goal being achieved become
// template variables with candidate sets; knowledge preconditions that are
// not known TRUE go to the uncertainty set U instead of the goal set.
//
// Stage 2 enumerates the Cartesian product of the candidate sets, validates
// each binding by replaying the plan over the beliefs, ranks bindings by the
// number of U literals still UNKNOWN and inserts one resolution action for
// each of them ahead of the first step that needs it.
//
// Truth semantics used throughout:
//   * knowledge precondition: TRUE holds; UNKNOWN is uncertainty; FALSE fails.
//   * fluent precondition: TRUE holds; FALSE/UNKNOWN must be achieved by an
//     action, unless no action can produce it, in which case UNKNOWN is
//     assumed (least commitment) and FALSE fails.
//

#include "spa/kb.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace spa {

struct PlannerConfig {
    std::size_t depth_limit = 32;      // actions per plan
    std::size_t binding_cap = 10000;   // stage-2 enumeration limit
    std::size_t node_limit = 50000;    // stage-1 expansions before giving up
    double retry_wait = 5.0;           // simulated seconds before re-planning after failure
};

/// Which (schema, polarity) pairs some action can produce.
class Achievability {
public:
    Achievability() = default;
    Achievability(const DomainSpec& spec, std::span<const ActionSchema> actions);
    bool achievable(const Literal& lit) const;

private:
    std::vector<std::array<bool, 2>> table_;
};

/// A step of the plan template: action plus one term per parameter. Terms
/// that are holes name template variables.
struct TemplateStep {
    std::size_t action = 0;
    std::vector<Term> args;
    bool operator==(const TemplateStep&) const = default;
};

struct UncertainLiteral {
    Literal literal;          // holes name template variables
    std::size_t first_step = 0;  // execution index of the earliest step needing it
    bool operator==(const UncertainLiteral&) const = default;
};

struct PlanTemplate {
    std::vector<TemplateStep> steps;                 // execution order
    std::vector<std::vector<EntityId>> candidates;   // per template variable
    std::vector<int> unbound;                        // K: variables still open
    std::vector<UncertainLiteral> uncertainty;       // U
    std::vector<Literal> constraints;                // fluent goals closed by binding
    std::vector<Literal> desires;

    /// K as (step index, parameter name) pairs.
    std::vector<std::pair<std::size_t, std::string>> unbound_args(std::span<const ActionSchema> actions) const;
    std::size_t variable_count() const { return candidates.size(); }
};

enum class ResolutionStrategy { Ask, Explore };

struct ResolutionAction {
    Literal target;    // holes where the binding was still open at planning time
    Literal grounded;  // target under the plan's binding
    ResolutionStrategy strategy = ResolutionStrategy::Ask;
    bool resolved = false;
};

struct PlanStep {
    bool is_resolution = false;
    std::size_t action = 0;
    std::vector<EntityId> args;
    ResolutionAction resolution;
};

/// A belief read by a grounded plan from the current belief state; checked
/// again cheaply whenever beliefs change.
struct Requirement {
    Literal literal;
    bool unknown_ok = false;
};

struct GroundedPlan {
    Binding binding;  // entity per template variable
    std::size_t uncertainty_count = 0;
    std::vector<PlanStep> steps;
    std::vector<Requirement> requirements;
    std::vector<Literal> uncertain;  // grounded U literals, deduplicated
    // Requirements, then uncertain literals, then resolution targets, as
    // indices into the owning planner's interned literal table.
    std::vector<std::uint32_t> read_ids;

    std::size_t resolution_count() const;
};

struct NoPlan {
    std::string reason;
    std::optional<Literal> unachievable;
};

/// Resumable stage-1 search. Each call to next() yields the next template in
/// search order; alternatives stay on the branch stack for backtracking.
class TemplateSearch {
public:
    TemplateSearch(const BeliefState& beliefs, std::vector<Literal> desires,
                   std::span<const ActionSchema> actions, PlannerConfig config = {});
    ~TemplateSearch();
    TemplateSearch(TemplateSearch&&) noexcept;
    TemplateSearch& operator=(TemplateSearch&&) noexcept;

    std::optional<PlanTemplate> next();
    bool exhausted() const;
    std::size_t expansions() const;
    /// First desire for which no achieving action was ever found, if any.
    std::optional<Literal> first_unachievable() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::variant<PlanTemplate, NoPlan> plan_stage1(const BeliefState& beliefs, const std::vector<Literal>& desires,
                                               std::span<const ActionSchema> actions,
                                               const PlannerConfig& config = {});

struct Stage2Result {
    std::vector<GroundedPlan> plans;
    bool truncated = false;
    std::size_t enumerated = 0;
};

Stage2Result plan_stage2(const PlanTemplate& templ, const BeliefState& beliefs,
                         std::span<const ActionSchema> actions, const PlannerConfig& config = {});

/// Re-evaluates a grounded plan against new beliefs. Returns false when the
/// plan is no longer valid.
bool rescore(GroundedPlan& plan, const BeliefState& beliefs, const Achievability& achievable);

// ---------------------------------------------------------------------------
// Execution-time state
// ---------------------------------------------------------------------------

enum class Directive { Continue, Rebind, Backtrack, FailAndWait };

std::string_view to_string(Directive d);

struct PlanEvent {
    enum class Kind { StepOk, StepFailed, NewBelief } kind = Kind::StepOk;
    std::optional<Literal> belief;
};

struct PlanTiming {
    double stage1_us = 0;  // wall clock, microseconds
    double stage2_us = 0;
    bool incremental = false;
};

/// One agent's planner: the active template, the ranked bindings, and the
/// search that produced them (for backtracking).
class PlannerState {
public:
    PlannerState() = default;
    PlannerState(PlannerState&&) noexcept = default;
    PlannerState& operator=(PlannerState&&) noexcept = default;

    bool has_plan() const { return !bindings_.empty(); }
    const GroundedPlan& current() const { return bindings_.front(); }
    GroundedPlan& current() { return bindings_.front(); }
    const std::vector<GroundedPlan>& bindings() const { return bindings_; }
    const std::optional<PlanTemplate>& plan_template() const { return template_; }
    double retry_wait_until() const { return retry_wait_until_; }
    bool truncated() const { return truncated_; }
    const std::vector<Literal>& desires() const { return desires_; }

    /// Full stage 1 + stage 2 from scratch.
    std::variant<PlanTiming, NoPlan> plan(const BeliefState& beliefs, const std::vector<Literal>& desires,
                                          std::span<const ActionSchema> actions, const PlannerConfig& config);

    /// Stage 2 only when the cached template still fits the beliefs; otherwise
    /// a full plan.
    std::variant<PlanTiming, NoPlan> replan(const BeliefState& beliefs, const std::vector<Literal>& desires,
                                            std::span<const ActionSchema> actions,
                                            const PlannerConfig& config);

    struct Outcome {
        Directive directive = Directive::Continue;
        PlanTiming timing;
    };
    Outcome advance(const PlanEvent& event, const BeliefState& beliefs, std::span<const ActionSchema> actions,
                    const PlannerConfig& config, double now);

    void clear();

private:
    bool next_template(const BeliefState& beliefs, std::span<const ActionSchema> actions,
                       const PlannerConfig& config, PlanTiming& timing);
    void intern_reads();
    // Re-checks every binding against the beliefs, evaluating each distinct
    // literal once; drops invalid bindings and re-sorts the rest.
    void rescore_all(const BeliefState& beliefs);

    std::vector<Literal> reads_;

    std::vector<Literal> desires_;
    std::optional<PlanTemplate> template_;
    std::vector<GroundedPlan> bindings_;
    std::unique_ptr<TemplateSearch> search_;
    Achievability achievable_;
    double retry_wait_until_ = 0.0;
    bool truncated_ = false;
};

/// True when replaying the plan's action steps over a copy of the beliefs
/// leaves every desire TRUE.
bool replay_satisfies(const GroundedPlan& plan, const BeliefState& beliefs, std::span<const ActionSchema> actions,
                      const std::vector<Literal>& desires);

std::string describe(const DomainSpec& spec, std::span<const ActionSchema> actions, const PlanStep& step);
std::string describe(const DomainSpec& spec, std::span<const ActionSchema> actions, const PlanTemplate& templ);

/// One newline-delimited JSON record per planning event.
nlohmann::json trace_record(const std::string& agent, double sim_time, const PlanTiming& timing,
                            const PlannerState& state, const DomainSpec& spec);

}  // namespace spa
