#include "vapt/text.hpp"

#include <clocale>
#include <cwctype>
#include <locale.h>

#include <array>
#include <map>

namespace vapt::text {

namespace {

locale_t utf8_locale() {
  static locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
    if (!l) l = newlocale(LC_CTYPE_MASK, "en_US.UTF-8", static_cast<locale_t>(nullptr));
    return l;
  }();
  return loc;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x00A0 || c == 0x3000;
}

struct ScriptRange {
  char32_t lo;
  char32_t hi;
  const char* tag;
};

constexpr std::array<ScriptRange, 14> kScripts{{
    {0x0041, 0x005A, "und-Latn"},
    {0x0061, 0x007A, "und-Latn"},
    {0x00C0, 0x024F, "und-Latn"},
    {0x0370, 0x03FF, "el"},
    {0x0400, 0x04FF, "ru"},
    {0x0590, 0x05FF, "he"},
    {0x0600, 0x06FF, "ar"},
    {0x0900, 0x097F, "hi"},
    {0x0E00, 0x0E7F, "th"},
    {0x1100, 0x11FF, "ko"},
    {0x3040, 0x30FF, "ja"},
    {0x4E00, 0x9FFF, "zh"},
    {0xAC00, 0xD7AF, "ko"},
    {0x3130, 0x318F, "ko"},
}};

}  // namespace

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto b = static_cast<unsigned char>(s[i]);
    char32_t cp;
    std::size_t len;
    if (b < 0x80) {
      cp = b;
      len = 1;
    } else if ((b >> 5) == 0x6) {
      cp = b & 0x1F;
      len = 2;
    } else if ((b >> 4) == 0xE) {
      cp = b & 0x0F;
      len = 3;
    } else if ((b >> 3) == 0x1E) {
      cp = b & 0x07;
      len = 4;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool valid = true;
    for (std::size_t k = 1; k < len; ++k) {
      auto c = static_cast<unsigned char>(s[i + k]);
      if ((c >> 6) != 0x2) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (c & 0x3F);
    }
    if (!valid) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  std::u32string cps = decode_utf8(s);
  std::size_t b = 0, e = cps.size();
  while (b < e && is_space(cps[b])) ++b;
  while (e > b && is_space(cps[e - 1])) --e;
  return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::u32string cps = decode_utf8(s);
  locale_t loc = utf8_locale();
  for (char32_t& c : cps) {
    if (c < 0x80) {
      if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
    } else if (loc) {
      c = static_cast<char32_t>(towlower_l(static_cast<wint_t>(c), loc));
    }
  }
  return encode_utf8(cps);
}

std::string normalize_label(std::string_view s) { return trim(to_lower(s)); }

std::optional<std::string> detect_language_tag(std::string_view s) {
  std::map<std::string, std::size_t> counts;
  for (char32_t c : decode_utf8(s)) {
    for (const auto& r : kScripts) {
      if (c >= r.lo && c <= r.hi) {
        ++counts[r.tag];
        break;
      }
    }
  }
  if (counts.empty()) return std::nullopt;
  // Kana marks Japanese even when kanji dominate the count.
  if (counts.count("ja")) return std::string("ja");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

}  // namespace vapt::text
