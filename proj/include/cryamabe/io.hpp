#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "riesz.hpp"

namespace cryamabe {

using json = nlohmann::json;

// Writes to a sibling temp file, then renames over the target.
inline void atomic_write(const std::filesystem::path &path, const std::string &content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("atomic_write: cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out)
      throw std::runtime_error("atomic_write: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_number(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// CSV table: header row, '.' decimals (printf under the "C" locale), LF endings.
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
  public:
    explicit Row(CsvTable &t) : t_(t) {}
    Row &operator<<(double x) { return put(format_number(x)); }
    Row &operator<<(int x) { return put(std::to_string(x)); }
    Row &operator<<(long x) { return put(std::to_string(x)); }
    Row &operator<<(unsigned long x) { return put(std::to_string(x)); }
    Row &operator<<(bool x) { return put(x ? "1" : "0"); }
    Row &operator<<(const std::string &s) { return put(quote(s)); }
    Row &operator<<(const char *s) { return put(quote(s)); }
    ~Row() { t_.rows_.push_back(std::move(cells_)); }

  private:
    Row &put(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    static std::string quote(const std::string &s) {
      if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
      std::string q = "\"";
      for (char c : s)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    }
    CsvTable &t_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }
  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string s;
    auto line = [&](const std::vector<std::string> &c) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (i)
          s += ',';
        s += c[i];
      }
      s += '\n';
    };
    line(header_);
    for (const auto &r : rows_) {
      require(r.size() == header_.size(), "CsvTable: row width does not match the header");
      line(r);
    }
    return s;
  }

  void save(const std::filesystem::path &p) const { atomic_write(p, str()); }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void save_json(const std::filesystem::path &p, const json &j) { atomic_write(p, j.dump(2) + "\n"); }

inline json load_json(const std::filesystem::path &p) {
  std::ifstream in(p);
  if (!in)
    throw std::runtime_error("load_json: cannot open " + p.string());
  return json::parse(in);
}

// Grid field: one "# {json}" line with box and resolution, then x,y,t,value rows.
inline void save_grid_csv(const GridFieldH &g, const std::filesystem::path &p) {
  json head{{"lo", g.lo}, {"hi", g.hi}, {"n", g.n}};
  std::string s = "# " + head.dump() + "\n";
  CsvTable t({"x", "y", "t", "value"});
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k)
        t.row() << g.coord(0, i) << g.coord(1, j) << g.coord(2, k) << g.at(i, j, k);
  atomic_write(p, s + t.str());
}

inline GridFieldH load_grid_csv(const std::filesystem::path &p) {
  std::ifstream in(p);
  if (!in)
    throw std::runtime_error("load_grid_csv: cannot open " + p.string());
  std::string line;
  std::getline(in, line);
  require(line.rfind("# ", 0) == 0, "load_grid_csv: missing JSON header");
  const json head = json::parse(line.substr(2));
  GridFieldH g = GridFieldH::make(head.at("lo").get<std::array<double, 3>>(), head.at("hi").get<std::array<double, 3>>(),
                                  head.at("n").get<std::array<int, 3>>());
  std::getline(in, line); // column names
  for (double &v : g.v) {
    require(static_cast<bool>(std::getline(in, line)), "load_grid_csv: truncated file");
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    std::string cell;
    for (int c = 0; c < 4; ++c)
      std::getline(ss, cell, ',');
    v = std::stod(cell);
  }
  return g;
}

} // namespace cryamabe
