#include "masuq/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

namespace masuq {
namespace {

constexpr std::string_view kBoxed = "\\boxed{";

// Index one past the brace closing the group opened just before `open`,
// or npos when unbalanced.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 1;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    else if (s[i] == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

// Removes one layer of $..$ / \(..\) / {..} that encloses the whole string.
bool strip_enclosing(std::string& s) {
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    std::size_t b = 0, e = s.size();
    while (b < e && s[b] == '$') ++b;
    while (e > b && s[e - 1] == '$') --e;
    s = trim(std::string_view(s).substr(b, e - b));
    return true;
  }
  if (starts_with(s, "\\(") && s.size() >= 4 && s.substr(s.size() - 2) == "\\)") {
    s = trim(std::string_view(s).substr(2, s.size() - 4));
    return true;
  }
  if (s.size() >= 2 && s.front() == '{' && match_brace(s, 1) == s.size() - 1) {
    s = trim(std::string_view(s).substr(1, s.size() - 2));
    return true;
  }
  return false;
}

bool simple_operand(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.';
  });
}

// \frac{a}{b} (and \dfrac, \tfrac) → a/b, innermost first via recursion on operands.
std::string rewrite_fracs(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t skip = 0;
    for (std::string_view m : {"\\frac{", "\\dfrac{", "\\tfrac{"}) {
      if (starts_with(s.substr(i), m)) skip = m.size();
    }
    if (skip != 0) {
      const std::size_t a0 = i + skip;
      const std::size_t a1 = match_brace(s, a0);
      if (a1 != std::string_view::npos && a1 + 1 < s.size() && s[a1 + 1] == '{') {
        const std::size_t b0 = a1 + 2;
        const std::size_t b1 = match_brace(s, b0);
        if (b1 != std::string_view::npos) {
          const std::string num = trim(rewrite_fracs(s.substr(a0, a1 - a0)));
          const std::string den = trim(rewrite_fracs(s.substr(b0, b1 - b0)));
          out += simple_operand(num) ? num : "(" + num + ")";
          out += '/';
          out += simple_operand(den) ? den : "(" + den + ")";
          i = b1 + 1;
          continue;
        }
      }
    }
    out += s[i++];
  }
  return out;
}

using i128 = __int128;

struct Rational {
  i128 num = 0;
  i128 den = 1;
};

constexpr i128 kLimit = static_cast<i128>(1) << 100;

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Unsigned decimal with optional thousands separators and fraction part.
std::optional<Rational> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string digits;
  std::size_t frac_digits = 0;
  bool seen_point = false;
  // Thousands separators are accepted only in well-formed 3-digit groups.
  const auto point = s.find('.');
  const std::string_view int_part = s.substr(0, point);
  if (int_part.find(',') != std::string_view::npos) {
    std::size_t first = int_part.find(',');
    if (first == 0 || first > 3) return std::nullopt;
    for (std::size_t p = first; p < int_part.size(); p += 4) {
      if (int_part[p] != ',' || p + 4 > int_part.size()) return std::nullopt;
    }
  }
  for (char c : s) {
    if (c == ',') {
      if (seen_point) return std::nullopt;
      continue;
    }
    if (c == '.') {
      if (seen_point) return std::nullopt;
      seen_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    digits += c;
    if (seen_point) ++frac_digits;
  }
  if (digits.empty() || digits.size() > 30) return std::nullopt;
  Rational r;
  for (char c : digits) r.num = r.num * 10 + (c - '0');
  for (std::size_t k = 0; k < frac_digits; ++k) r.den *= 10;
  return r;
}

std::optional<Rational> parse_signed(std::string_view s) {
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  auto r = parse_decimal(s);
  if (r && neg) r->num = -r->num;
  return r;
}

std::optional<Rational> parse_rational(std::string_view s) {
  std::string compact;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
  }
  std::string_view v = compact;
  std::optional<Rational> r;
  if (const auto slash = v.find('/'); slash != std::string_view::npos) {
    auto a = parse_signed(v.substr(0, slash));
    auto b = parse_signed(v.substr(slash + 1));
    if (!a || !b || b->num == 0) return std::nullopt;
    r = Rational{a->num * b->den, a->den * b->num};
  } else {
    r = parse_signed(v);
  }
  if (!r) return std::nullopt;
  if (r->den < 0) {
    r->den = -r->den;
    r->num = -r->num;
  }
  const i128 g = gcd128(r->num, r->den);
  if (g > 1) {
    r->num /= g;
    r->den /= g;
  }
  if (r->num >= kLimit || r->num <= -kLimit || r->den >= kLimit) return std::nullopt;
  return r;
}

std::string to_string128(i128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  if (neg) v = -v;
  std::string out;
  while (v > 0) {
    out += static_cast<char>('0' + static_cast<int>(v % 10));
    v /= 10;
  }
  if (neg) out += '-';
  std::reverse(out.begin(), out.end());
  return out;
}

std::string canonical(const Rational& r) {
  if (r.den == 1) return to_string128(r.num);
  return to_string128(r.num) + "/" + to_string128(r.den);
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

// Leading option letter of an MCQ answer: "b", "(b)", "b.", "b) text".
std::optional<char> option_letter(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '(') ++i;
  if (i >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i]))) return std::nullopt;
  const char letter = s[i++];
  if (i == s.size()) return letter;
  if (s[i] == ')' || s[i] == '.' || s[i] == ':') {
    return letter;
  }
  return std::nullopt;
}

// Text after the option marker, if any ("b) paris" → "paris").
std::string option_text(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '(') ++i;
  i += 1;
  while (i < s.size() && (s[i] == ')' || s[i] == '.' || s[i] == ':')) ++i;
  return trim(s.substr(std::min(i, s.size())));
}

bool letter_only(std::string_view s) { return option_letter(s) && option_text(s).empty(); }

}  // namespace

std::optional<ExtractedAnswer> extract_boxed(std::string_view text,
                                             std::span<const TokenRecord> tokens, TaskKind kind) {
  std::size_t pos = text.rfind(kBoxed);
  while (pos != std::string_view::npos) {
    const std::size_t begin = pos + kBoxed.size();
    const std::size_t close = match_brace(text, begin);
    if (close != std::string_view::npos) {
      ExtractedAnswer ans;
      ans.raw = std::string(text.substr(begin, close - begin));
      if (trim(ans.raw).empty()) return std::nullopt;
      ans.normalized = normalize(ans.raw, kind);
      if (!tokens.empty()) {
        std::size_t offset = 0;
        std::optional<std::size_t> first;
        std::size_t last = 0;
        for (std::size_t k = 0; k < tokens.size(); ++k) {
          const std::size_t t0 = offset;
          const std::size_t t1 = offset + tokens[k].token_text.size();
          offset = t1;
          if (t1 > begin && t0 < close) {
            if (!first) first = k;
            last = k + 1;
          }
        }
        if (first) ans.answer_token_span = TokenSpan{*first, last};
      }
      return ans;
    }
    if (pos == 0) break;
    pos = text.rfind(kBoxed, pos - 1);
  }
  return std::nullopt;
}

std::string normalize(std::string_view raw, TaskKind kind) {
  std::string s = trim(raw);
  while (strip_enclosing(s)) {
  }
  s = rewrite_fracs(s);
  // Common LaTeX noise that carries no value.
  for (std::string_view junk : {"\\left", "\\right", "\\!", "\\,", "\\;", "\\%", "^\\circ"}) {
    for (auto p = s.find(junk); p != std::string::npos; p = s.find(junk)) s.erase(p, junk.size());
  }
  for (std::string_view wrap : {"\\text{", "\\textbf{", "\\mathrm{"}) {
    for (auto p = s.find(wrap); p != std::string::npos; p = s.find(wrap)) {
      const std::size_t close = match_brace(s, p + wrap.size());
      if (close == std::string::npos) break;
      s = s.substr(0, p) + s.substr(p + wrap.size(), close - p - wrap.size()) + s.substr(close + 1);
    }
  }
  s = collapse_spaces(trim(s));
  while (strip_enclosing(s)) {
  }
  if (kind == TaskKind::multiple_choice) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (letter_only(s)) return std::string(1, *option_letter(s));
  }
  if (auto r = parse_rational(s)) return canonical(*r);
  return s;
}

bool is_numeric_answer(std::string_view normalized) {
  auto r = parse_rational(normalized);
  return r && canonical(*r) == normalized;
}

bool answers_match(std::string_view extracted, std::string_view gold, TaskKind kind) {
  const std::string g = normalize(gold, kind);
  if (extracted == g) return true;
  if (kind != TaskKind::multiple_choice) return false;
  // Letter-or-text equality between "b", "b) paris" and "paris".
  const auto le = option_letter(extracted), lg = option_letter(g);
  if (letter_only(g) && le && *le == g[0]) return true;
  if (letter_only(extracted) && lg && *lg == extracted[0]) return true;
  if (lg && option_text(g) == extracted) return true;
  if (le && option_text(extracted) == g && !g.empty()) return true;
  return false;
}

bool grade(const std::optional<ExtractedAnswer>& extracted, std::string_view gold, TaskKind kind) {
  if (!extracted || extracted->normalized.empty()) return false;
  return answers_match(extracted->normalized, gold, kind);
}

std::optional<std::string> majority_vote(std::span<const std::optional<std::string>> answers) {
  std::vector<std::pair<std::string, int>> tally;  // first-occurrence order
  for (const auto& a : answers) {
    if (!a || a->empty()) continue;
    auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& e) { return e.first == *a; });
    if (it == tally.end()) tally.emplace_back(*a, 1);
    else ++it->second;
  }
  if (tally.empty()) return std::nullopt;
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

}  // namespace masuq
