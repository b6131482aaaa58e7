#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <locale>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamstep {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Whitespace-separated numeric triples, one per line. '#' starts a comment and
/// blank lines are skipped.
inline std::vector<std::array<double, 3>> parse_triples(std::istream& in) {
  std::vector<std::array<double, 3>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    std::array<double, 3> t{};
    if (!(ls >> t[0] >> t[1] >> t[2])) throw ParseError(lineno, "expected three numbers");
    std::string extra;
    if (ls >> extra) throw ParseError(lineno, "unexpected trailing token '" + extra + "'");
    for (double v : t) {
      if (!std::isfinite(v)) throw ParseError(lineno, "non-finite value");
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace beamstep
