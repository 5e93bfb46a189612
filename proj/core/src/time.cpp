#include "vapt/time.hpp"

#include <cctype>
#include <cstdio>

#include "vapt/error.hpp"

namespace vapt {

namespace {

int read_digits(std::string_view text, std::size_t& pos, std::size_t count) {
  if (pos + count > text.size()) fail(Errc::parse, "truncated timestamp: " + std::string(text));
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    char c = text[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c)))
      fail(Errc::parse, "bad timestamp: " + std::string(text));
    value = value * 10 + (c - '0');
  }
  pos += count;
  return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || (text[pos] != c && std::tolower(static_cast<unsigned char>(text[pos])) != c))
    fail(Errc::parse, "bad timestamp: " + std::string(text));
  ++pos;
}

}  // namespace

std::string format_rfc3339(Instant t) {
  using namespace std::chrono;
  auto day = floor<days>(t);
  year_month_day ymd{day};
  auto tod = t - day;
  auto h = duration_cast<hours>(tod);
  auto m = duration_cast<minutes>(tod - h);
  auto s = duration_cast<seconds>(tod - h - m);
  auto ms = duration_cast<milliseconds>(tod - h - m - s);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(h.count()), static_cast<int>(m.count()),
                static_cast<int>(s.count()), static_cast<int>(ms.count()));
  return buf;
}

Instant parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y = read_digits(text, pos, 4);
  expect(text, pos, '-');
  int mo = read_digits(text, pos, 2);
  expect(text, pos, '-');
  int d = read_digits(text, pos, 2);
  expect(text, pos, 't');
  int h = read_digits(text, pos, 2);
  expect(text, pos, ':');
  int mi = read_digits(text, pos, 2);
  expect(text, pos, ':');
  int s = read_digits(text, pos, 2);
  int millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int scale = 100;
    bool any = false;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      millis += (text[pos] - '0') * scale;
      scale /= 10;
      ++pos;
      any = true;
    }
    if (!any) fail(Errc::parse, "bad fractional seconds: " + std::string(text));
  }
  int offset_minutes = 0;
  if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
    ++pos;
  } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    int sign = text[pos] == '-' ? -1 : 1;
    ++pos;
    int oh = read_digits(text, pos, 2);
    expect(text, pos, ':');
    int om = read_digits(text, pos, 2);
    offset_minutes = sign * (oh * 60 + om);
  } else {
    fail(Errc::parse, "timestamp lacks a UTC offset: " + std::string(text));
  }
  if (pos != text.size()) fail(Errc::parse, "trailing characters in timestamp: " + std::string(text));

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) fail(Errc::parse, "invalid date: " + std::string(text));
  Instant t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{millis};
  return t - minutes{offset_minutes};
}

Instant now_utc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::string format_countdown(std::chrono::milliseconds remaining) {
  if (remaining.count() < 0) remaining = std::chrono::milliseconds{0};
  long long total_seconds = (remaining.count() + 999) / 1000;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld:%02lld", total_seconds / 60, total_seconds % 60);
  return buf;
}

}  // namespace vapt
