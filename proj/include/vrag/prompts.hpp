#pragma once

#include <string>
#include <string_view>

namespace vrag::prompts {

/// System prompt for the search / crop / answer agent.
inline constexpr std::string_view kAgentSystem =
    "Answer the given question. You must conduct reasoning inside <think> and </think> first every "
    "time you get new information. After reasoning, if you find you lack some knowledge, you can call "
    "a search engine by <search> query </search> and user will return the searched results. Every "
    "time you retrieve an image, you have the option to crop it to obtain a clearer view, the format "
    "for coordinates is <bbox>[x1, y1, x2, y2]</bbox>. You can search as many times as your want. If "
    "you find no further external knowledge needed, you can directly provide the answer inside "
    "<answer> and </answer>, without detailed illustrations. For example, <answer> Beijing </answer>.";

inline std::string agent_user(std::string_view query) { return "Query: " + std::string(query); }

/// System prompt for the answer-correctness judge.
inline constexpr std::string_view kJudgeSystem =
    "Character Introduction\n"
    "You are an expert evaluation system for a question answering chatbot.\n"
    "You are given the following information:\n"
    "- the query\n"
    "- a generated answer\n"
    "- a reference answer\n"
    "Your task is to evaluate the correctness of the generated answer.\n"
    "\n"
    "Response Format\n"
    "Your response should be formatted as following:\n"
    "<judge>True or False</judge>\n"
    "\n"
    "If the generated answer is correct, please set \"judge\" to True. Otherwise, please set \"judge\" "
    "to False.\n"
    "\n"
    "Please note that the generated answer may contain additional information beyond the reference "
    "answer.";

inline std::string judge_user(std::string_view query, std::string_view reference, std::string_view generated) {
  return "Query: " + std::string(query) + "\nReference Answer: " + std::string(reference) +
         "\nGenerated Answer: " + std::string(generated);
}

/// Corrective observation appended after an invalid action.
inline constexpr std::string_view kInvalidAction =
    "invalid action: respond with <think>...</think> followed by exactly one of "
    "<search>...</search>, <bbox>[x1, y1, x2, y2]</bbox> or <answer>...</answer>.";

/// Grounding expert instruction; the user turn carries the guide's thought
/// and the image the region refers to.
inline constexpr std::string_view kGroundingSystem =
    "You locate regions in document images. Given the reasoning of an assistant and the image it "
    "refers to, reply with the bounding box of the region the assistant wants to inspect, in the "
    "pixel coordinates of the image shown, as <bbox>[x1, y1, x2, y2]</bbox> and nothing else.";

inline std::string grounding_user(std::string_view thought) {
  return "Assistant reasoning: " + std::string(thought);
}

}  // namespace vrag::prompts
