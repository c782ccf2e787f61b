#pragma once

// Tagged action language emitted by the policy:
//   <think>...</think> followed by exactly one of
//   <search>query</search> | <region>[x1, y1, x2, y2]</region> | <bbox>...</bbox> | <answer>text</answer>
// docs/action_grammar.md carries the full grammar.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace vrag {

struct SearchAction {
  std::string query;
  bool operator==(const SearchAction&) const = default;
};

struct RegionAction {
  /// [x_min, y_min, x_max, y_max] as emitted, in the model's coordinate space.
  std::array<std::int64_t, 4> bbox{};
  /// 1-based index over image observations; empty means the latest one.
  std::optional<int> target_index;
  bool operator==(const RegionAction&) const = default;
};

struct AnswerAction {
  std::string text;
  bool operator==(const AnswerAction&) const = default;
};

using Action = std::variant<SearchAction, RegionAction, AnswerAction>;

enum class ActionKind { Search, Region, Answer };

inline ActionKind kind_of(const Action& a) { return static_cast<ActionKind>(a.index()); }
std::string_view to_string(ActionKind kind);

enum class Violation {
  MissingThink,
  NoAction,
  MultipleActions,
  UnclosedTag,
  UnmatchedClose,
  MalformedBbox,
  DegenerateBbox,
  EmptyPayload,
};

std::string_view to_string(Violation v);
std::optional<Violation> violation_from_string(std::string_view name);

struct ParsedResponse {
  std::optional<std::string> thought;
  std::optional<Action> action;
  std::vector<Violation> violations;

  bool pattern_valid() const noexcept { return violations.empty(); }
  bool has(Violation v) const noexcept;
};

/// Parses one whole Assistant turn. Never throws; every problem is a violation.
ParsedResponse parse_response(std::string_view raw_text);

/// Parses a bare region payload such as "image 2: [1, 2, 3, 4]" or "1,2,3,4".
/// Returns nullopt for anything that is not four non-negative integers.
std::optional<RegionAction> parse_region_payload(std::string_view payload);

/// Emits the canonical tag for an action; <region> is used for boxes.
std::string render_action(const Action& action);

/// "<think>thought</think>" followed by the rendered action.
std::string render_response(std::string_view thought, const Action& action);

nlohmann::json action_to_json(const Action& action);
Action action_from_json(const nlohmann::json& j);

}  // namespace vrag
