// SPDX-License-Identifier: Apache-2.0
#include "relann/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <regex>
#include <unordered_set>

#include "relann/errors.hpp"
#include "relann/hashing.hpp"
#include "relann/log.hpp"
#include "template_assets.hpp"

namespace relann {

namespace {

std::string_view asset(std::string_view name) {
  for (const auto& a : detail::template_assets()) {
    if (a.name == name) return a.content;
  }
  throw Error("missing prompt template asset: " + std::string(name));
}

// Single pass over the template: `{name}` is replaced when `name` is a
// known slot, anything else is copied through. Substituted text is never
// rescanned, so inputs containing braces are safe.
std::string substitute(std::string_view tmpl, const std::map<std::string_view, std::string_view>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        if (auto it = slots.find(tmpl.substr(i + 1, close - i - 1)); it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t find_last(std::string_view text, std::string_view label, std::size_t before = std::string_view::npos) {
  if (before == std::string_view::npos) return text.rfind(label);
  if (before < label.size()) return std::string_view::npos;
  return text.substr(0, before).rfind(label);
}

std::string_view line_after(std::string_view text, std::size_t pos) {
  auto end = text.find('\n', pos);
  return text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
}

std::string_view confidence_label(const PromptVariant& variant) {
  return variant.confidence_phrasing == ConfidencePhrasing::ask_probability ? "[Probability Helpful]:"
                                                                             : "[Confidence]:";
}

constexpr std::string_view kGuessLabel = "[Guess]:";
constexpr std::string_view kReasonLabel = "[Reason]:";

}  // namespace

std::string to_string(const PromptVariant& v) {
  if (v.ranking_mode == RankingMode::listwise) return v.with_definition ? "list-d" : "list";
  std::string name = "point";
  if (v.cot) name += "-cot";
  name += v.confidence_phrasing == ConfidencePhrasing::ask_probability ? "-prob" : "-ask";
  if (v.with_definition) name += "-d";
  return name;
}

PromptVariant parse_variant(std::string_view name) {
  static const std::vector<PromptVariant> all = [] {
    std::vector<PromptVariant> v;
    for (bool def : {false, true}) {
      v.push_back({RankingMode::listwise, false, def, ConfidencePhrasing::ask_confidence});
      for (bool cot : {false, true}) {
        for (auto ph : {ConfidencePhrasing::ask_confidence, ConfidencePhrasing::ask_probability}) {
          v.push_back({RankingMode::pointwise, cot, def, ph});
        }
      }
    }
    return v;
  }();
  const auto wanted = lower(trim(name));
  for (const auto& v : all) {
    if (to_string(v) == wanted) return v;
  }
  throw PreconditionError("unknown prompt variant \"" + std::string(name) +
                          "\" (expected point[-cot]-ask[-d], point[-cot]-prob[-d], list[-d])");
}

std::string_view to_string(Guess guess) { return guess == Guess::yes ? "Yes" : "No"; }

Guess parse_guess(std::string_view text) {
  const auto t = lower(trim(text));
  if (t == "yes") return Guess::yes;
  if (t == "no") return Guess::no;
  throw SchemaError("guess must be \"Yes\" or \"No\", got \"" + std::string(text) + "\"");
}

std::string render_definition_prompt(std::string_view question) {
  if (trim(question).empty()) throw PreconditionError("render_definition_prompt: empty question");
  return strip_trailing_newlines(substitute(asset("definition.txt"), {{"question", question}}));
}

std::string render_improved_definition_prompt(std::string_view question, std::span<const std::string> gold_examples) {
  if (trim(question).empty()) throw PreconditionError("render_improved_definition_prompt: empty question");
  if (gold_examples.empty()) {
    throw PreconditionError("render_improved_definition_prompt: at least one gold example is required");
  }
  std::string joined;
  for (std::size_t i = 0; i < gold_examples.size(); ++i) {
    if (i) joined += '\n';
    joined += gold_examples[i];
  }
  return strip_trailing_newlines(
      substitute(asset("improved_definition.txt"), {{"question", question}, {"examples", joined}}));
}

std::string render_background(const RelevanceDefinition& definition) {
  if (definition.provenance == DefinitionProvenance::fixed) return definition.meaning;
  std::string out = "Meaning of the question: " + definition.meaning;
  if (!definition.examples.empty()) {
    out += "\n\nExamples of information that the question is looking for:";
    for (std::size_t i = 0; i < definition.examples.size(); ++i) {
      out += "\n" + std::to_string(i + 1) + ". " + definition.examples[i];
    }
  }
  return out;
}

std::string render_pointwise_prompt(const Query& query, const RelevanceDefinition* definition,
                                    const DocumentChunk& chunk, const PromptVariant& variant) {
  if (variant.ranking_mode != RankingMode::pointwise) {
    throw PreconditionError("render_pointwise_prompt: variant " + to_string(variant) + " is not pointwise");
  }
  if (variant.with_definition && definition == nullptr) {
    throw PreconditionError("render_pointwise_prompt: variant " + to_string(variant) + " needs a definition for query " +
                            query.id);
  }
  const bool fixed = variant.with_definition && definition->provenance == DefinitionProvenance::fixed;

  std::string_view head_name = "pointwise_head_no_definition.txt";
  if (variant.with_definition) head_name = fixed ? "pointwise_head_fixed_qa.txt" : "pointwise_head_definition.txt";
  std::string_view body_name = "ask_confidence.txt";
  if (variant.confidence_phrasing == ConfidencePhrasing::ask_probability) {
    body_name = "ask_probability.txt";
  } else if (fixed) {
    body_name = "ask_confidence_fixed_qa.txt";
  }

  // Head and answer block are joined with exactly one blank line.
  const std::string tmpl = strip_trailing_newlines(std::string(asset(head_name))) + "\n" + std::string(asset(body_name));
  const std::string background = variant.with_definition ? render_background(*definition) : std::string();
  const std::string reason_line = variant.cot ? std::string(asset("reason_line.txt")) : std::string();
  return strip_trailing_newlines(substitute(tmpl, {{"background_information", background},
                                                   {"question", query.text},
                                                   {"paragraph_chunk", chunk.text},
                                                   {"reason_line", reason_line}}));
}

ListwisePrompt render_listwise_prompt(const Query& query, std::span<const std::string> passages,
                                      const RelevanceDefinition* definition) {
  if (passages.empty() || passages.size() > kMaxListwiseWindow) {
    throw PreconditionError("render_listwise_prompt: need 1.." + std::to_string(kMaxListwiseWindow) +
                            " passages, got " + std::to_string(passages.size()));
  }
  std::string joined;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (i) joined += '\n';
    joined += "[" + std::to_string(i + 1) + "] " + passages[i];
  }
  std::string block;
  if (definition) {
    const auto background = render_background(*definition);
    block = substitute(asset("listwise_definition_block.txt"), {{"relevance_definition", background}});
  }
  const auto num = std::to_string(passages.size());
  ListwisePrompt p;
  p.system = strip_trailing_newlines(std::string(asset("listwise_system.txt")));
  p.user = strip_trailing_newlines(substitute(
      asset("listwise_user.txt"),
      {{"num", num}, {"query", query.text}, {"passages", joined}, {"definition_block", block}}));
  return p;
}

RelevanceDefinition render_fixed_qa_definition() {
  RelevanceDefinition d;
  d.meaning = strip_trailing_newlines(std::string(asset("fixed_qa_definition.txt")));
  d.provenance = DefinitionProvenance::fixed;
  return d;
}

RelevanceDefinition parse_definition_response(std::string_view text, DefinitionProvenance provenance) {
  constexpr std::string_view kMeaning = "Meaning of the question:";
  constexpr std::string_view kExamples = "Examples of information that the question is looking for:";
  const auto m = find_last(text, kMeaning);
  if (m == std::string_view::npos) {
    throw ParseError("definition reply has no \"Meaning of the question:\" field", std::string(text));
  }
  const auto e = text.find(kExamples, m);
  auto meaning = text.substr(m + kMeaning.size(), e == std::string_view::npos ? std::string_view::npos
                                                                               : e - m - kMeaning.size());
  std::string cleaned;
  for (std::size_t pos = 0; pos <= meaning.size();) {
    auto eol = meaning.find('\n', pos);
    if (eol == std::string_view::npos) eol = meaning.size();
    const auto line = trim(meaning.substr(pos, eol - pos));
    if (!line.empty() && line != "'''") {
      if (!cleaned.empty()) cleaned += ' ';
      cleaned += line;
    }
    pos = eol + 1;
  }
  RelevanceDefinition d;
  d.meaning = cleaned;
  d.provenance = provenance;
  if (d.meaning.empty()) throw ParseError("definition reply has an empty meaning", std::string(text));

  if (e != std::string_view::npos) {
    static const std::regex item(R"(^\s*(?:\d+[.)]|[-*])\s*(.*\S)\s*$)");
    const auto rest = text.substr(e + kExamples.size());
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      auto eol = rest.find('\n', pos);
      if (eol == std::string_view::npos) eol = rest.size();
      const std::string line(rest.substr(pos, eol - pos));
      std::smatch match;
      if (std::regex_match(line, match, item)) {
        d.examples.push_back(match[1].str());
      } else if (!trim(line).empty() && trim(line) != "---" && trim(line) != "[...]") {
        d.examples.emplace_back(trim(line));
      }
      pos = eol + 1;
    }
  }
  return d;
}

ParsedPointwise parse_pointwise_response(std::string_view text, const PromptVariant& variant) {
  if (variant.ranking_mode != RankingMode::pointwise) {
    throw PreconditionError("parse_pointwise_response: variant " + to_string(variant) + " is not pointwise");
  }
  const auto g = find_last(text, kGuessLabel);
  if (g == std::string_view::npos) throw ParseError("response has no [Guess] field", std::string(text));

  ParsedPointwise out;
  {
    auto value = trim(line_after(text, g + kGuessLabel.size()));
    std::string word;
    for (const char c : value) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else if (!word.empty() || (!std::ispunct(static_cast<unsigned char>(c)) && !std::isspace(static_cast<unsigned char>(c)))) {
        break;
      }
    }
    if (word == "yes") {
      out.guess = Guess::yes;
    } else if (word == "no") {
      out.guess = Guess::no;
    } else {
      throw ParseError("invalid [Guess] value \"" + std::string(value) + "\"", std::string(text));
    }
  }

  const auto label = confidence_label(variant);
  const auto c = find_last(text, label);
  if (c == std::string_view::npos) {
    throw ParseError("response has no " + std::string(label.substr(0, label.size() - 1)) + " field",
                     std::string(text));
  }
  {
    static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?\s*(%?))");
    const std::string value(line_after(text, c + label.size()));
    std::smatch match;
    if (!std::regex_search(value, match, number)) {
      throw ParseError("invalid " + std::string(label) + " value \"" + value + "\"", std::string(text));
    }
    std::string digits = match[0].str();
    const bool percent = match[1].length() > 0;
    digits = std::string(trim(digits.substr(0, digits.size() - match[1].length())));
    if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), x);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
      throw ParseError("invalid " + std::string(label) + " value \"" + value + "\"", std::string(text));
    }
    if (percent) x /= 100.0;
    if (x < 0.0 || x > 1.0) {
      log::warn("confidence_clamped", {{"value", x}, {"raw", value}});
      x = std::clamp(x, 0.0, 1.0);
    }
    if (variant.confidence_phrasing == ConfidencePhrasing::ask_probability) {
      out.probability_helpful = x;
      out.confidence = out.guess == Guess::yes ? x : 1.0 - x;
    } else {
      out.confidence = x;
    }
  }

  if (variant.cot) {
    const auto r = find_last(text, kReasonLabel, g);
    if (r == std::string_view::npos) {
      log::warn("reason_missing", {{"variant", to_string(variant)}});
    } else {
      const auto start = r + kReasonLabel.size();
      out.reason = std::string(trim(text.substr(start, g - start)));
    }
  }
  return out;
}

std::string format_confidence(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, ec == std::errc() ? ptr : buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string format_pointwise_answer(const ParsedPointwise& parsed, const PromptVariant& variant) {
  std::string out;
  if (variant.cot && parsed.reason) out += "[Reason]: " + *parsed.reason + "\n";
  out += "[Guess]: " + std::string(to_string(parsed.guess)) + "\n";
  if (variant.confidence_phrasing == ConfidencePhrasing::ask_probability) {
    const double p = parsed.probability_helpful.value_or(parsed.guess == Guess::yes ? parsed.confidence
                                                                                   : 1.0 - parsed.confidence);
    out += "[Probability Helpful]: " + format_confidence(p);
  } else {
    out += "[Confidence]: " + format_confidence(parsed.confidence);
  }
  return out;
}

std::vector<std::size_t> parse_listwise_response(std::string_view text, std::size_t n) {
  if (n == 0) throw PreconditionError("parse_listwise_response: n must be positive");
  static const std::regex id(R"(\[(\d+)\])");
  const std::string s(text);
  bool any = false;
  std::vector<std::size_t> order;
  std::vector<bool> seen(n + 1, false);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), id); it != std::sregex_iterator(); ++it) {
    any = true;
    const auto digits = (*it)[1].str();
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || v < 1 || v > n || seen[v]) continue;
    seen[v] = true;
    order.push_back(v);
  }
  if (!any) throw ParseError("listwise response has no bracketed identifiers", s);
  for (std::size_t v = 1; v <= n; ++v) {
    if (!seen[v]) order.push_back(v);
  }
  return order;
}

std::string_view template_version() { return detail::template_version(); }

std::vector<std::pair<std::string, std::string>> template_hashes() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& a : detail::template_assets()) out.emplace_back(std::string(a.name), sha256_hex(a.content));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace relann
