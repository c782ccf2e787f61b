#include "vrag/action_grammar.hpp"

#include <algorithm>
#include <charconv>
#include <regex>

#include "vrag/errors.hpp"

namespace vrag {

namespace {

constexpr std::array<std::string_view, 5> kTags = {"think", "search", "region", "bbox", "answer"};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

struct OpenTag {
  std::size_t pos = std::string_view::npos;
  std::string_view name;
};

OpenTag find_next_open(std::string_view text, std::size_t from) {
  OpenTag best;
  for (auto name : kTags) {
    std::string open = "<" + std::string(name) + ">";
    auto p = text.find(open, from);
    if (p < best.pos) best = {p, name};
  }
  return best;
}

bool contains_close(std::string_view segment) {
  return std::any_of(kTags.begin(), kTags.end(), [&](std::string_view name) {
    return segment.find("</" + std::string(name) + ">") != std::string_view::npos;
  });
}

void add(std::vector<Violation>& out, Violation v) {
  if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
}

}  // namespace

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Search: return "search";
    case ActionKind::Region: return "region";
    case ActionKind::Answer: return "answer";
  }
  return "unknown";
}

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::MissingThink: return "MissingThink";
    case Violation::NoAction: return "NoAction";
    case Violation::MultipleActions: return "MultipleActions";
    case Violation::UnclosedTag: return "UnclosedTag";
    case Violation::UnmatchedClose: return "UnmatchedClose";
    case Violation::MalformedBbox: return "MalformedBbox";
    case Violation::DegenerateBbox: return "DegenerateBbox";
    case Violation::EmptyPayload: return "EmptyPayload";
  }
  return "Unknown";
}

std::optional<Violation> violation_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Violation::EmptyPayload); ++i) {
    auto v = static_cast<Violation>(i);
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

bool ParsedResponse::has(Violation v) const noexcept {
  return std::find(violations.begin(), violations.end(), v) != violations.end();
}

std::optional<RegionAction> parse_region_payload(std::string_view payload) {
  static const std::regex kBox(
      R"(^\s*(?:image\s*(\d+)\s*:)?\s*\[?\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\]?\s*$)",
      std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(payload.begin(), payload.end(), m, kBox)) return std::nullopt;

  RegionAction region;
  auto to_int = [](const auto& sub, auto& out) {
    auto first = &*sub.first;
    auto last = first + sub.length();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
  };
  for (int i = 0; i < 4; ++i) {
    if (!to_int(m[i + 2], region.bbox[i])) return std::nullopt;
  }
  if (m[1].matched) {
    int k = 0;
    if (!to_int(m[1], k) || k < 1) return std::nullopt;
    region.target_index = k;
  }
  return region;
}

ParsedResponse parse_response(std::string_view raw_text) {
  ParsedResponse out;
  std::vector<Action> actions;
  int action_tags = 0;
  bool action_broken = false;

  std::size_t pos = 0;
  while (true) {
    auto open = find_next_open(raw_text, pos);
    auto gap = raw_text.substr(pos, open.pos == std::string_view::npos ? std::string_view::npos
                                                                       : open.pos - pos);
    if (contains_close(gap)) add(out.violations, Violation::UnmatchedClose);
    if (open.pos == std::string_view::npos) break;

    const std::string close = "</" + std::string(open.name) + ">";
    const auto body_start = open.pos + open.name.size() + 2;
    const auto close_pos = raw_text.find(close, body_start);
    const bool is_action = open.name != "think";
    if (is_action) ++action_tags;

    if (close_pos == std::string_view::npos) {
      add(out.violations, Violation::UnclosedTag);
      if (is_action) action_broken = true;
      pos = body_start;
      continue;
    }

    auto body = trim(raw_text.substr(body_start, close_pos - body_start));
    pos = close_pos + close.size();

    if (!is_action) {
      if (!out.thought) out.thought = std::string(body);
      continue;
    }
    if (open.name == "search" || open.name == "answer") {
      if (body.empty()) {
        add(out.violations, Violation::EmptyPayload);
        action_broken = true;
      } else if (open.name == "search") {
        actions.emplace_back(SearchAction{std::string(body)});
      } else {
        actions.emplace_back(AnswerAction{std::string(body)});
      }
      continue;
    }
    // region / bbox
    auto region = parse_region_payload(body);
    if (!region) {
      add(out.violations, Violation::MalformedBbox);
      action_broken = true;
    } else if (region->bbox[0] >= region->bbox[2] || region->bbox[1] >= region->bbox[3]) {
      add(out.violations, Violation::DegenerateBbox);
      action_broken = true;
    } else {
      actions.emplace_back(*region);
    }
  }

  if (!out.thought) add(out.violations, Violation::MissingThink);
  if (action_tags == 0) add(out.violations, Violation::NoAction);
  if (action_tags > 1) add(out.violations, Violation::MultipleActions);
  if (action_tags == 1 && !action_broken && actions.size() == 1) out.action = actions.front();
  return out;
}

std::string render_action(const Action& action) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, SearchAction>) {
          return "<search>" + a.query + "</search>";
        } else if constexpr (std::is_same_v<T, AnswerAction>) {
          return "<answer>" + a.text + "</answer>";
        } else {
          std::string s = "<region>";
          if (a.target_index) s += "image " + std::to_string(*a.target_index) + ": ";
          s += "[" + std::to_string(a.bbox[0]) + ", " + std::to_string(a.bbox[1]) + ", " +
               std::to_string(a.bbox[2]) + ", " + std::to_string(a.bbox[3]) + "]</region>";
          return s;
        }
      },
      action);
}

std::string render_response(std::string_view thought, const Action& action) {
  return "<think>" + std::string(thought) + "</think>" + render_action(action);
}

nlohmann::json action_to_json(const Action& action) {
  return std::visit(
      [](const auto& a) -> nlohmann::json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, SearchAction>) {
          return {{"type", "search"}, {"query", a.query}};
        } else if constexpr (std::is_same_v<T, AnswerAction>) {
          return {{"type", "answer"}, {"text", a.text}};
        } else {
          nlohmann::json j = {{"type", "region"}, {"bbox", a.bbox}};
          if (a.target_index) j["target_index"] = *a.target_index;
          return j;
        }
      },
      action);
}

Action action_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "search") return SearchAction{j.at("query").get<std::string>()};
  if (type == "answer") return AnswerAction{j.at("text").get<std::string>()};
  if (type == "region") {
    RegionAction r;
    r.bbox = j.at("bbox").get<std::array<std::int64_t, 4>>();
    if (j.contains("target_index")) r.target_index = j.at("target_index").get<int>();
    return r;
  }
  throw Error(ErrorCode::Parse, "unknown action type '" + type + "'");
}

}  // namespace vrag
