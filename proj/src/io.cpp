#include "rgeom/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "rgeom/error.hpp"

namespace rgeom::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
  std::vector<double> row;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const auto comma = line.find(',', pos);
    const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) {
      throw InputError("csv: line " + std::to_string(line_no) + ": bad number '" + cell + "'");
    }
    for (const char* p = end; *p; ++p) {
      if (*p != ' ' && *p != '\r' && *p != '\t') {
        throw InputError("csv: line " + std::to_string(line_no) + ": trailing characters in '" + cell + "'");
      }
    }
    row.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return row;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw InputError("csv: ragged rows (row " + std::to_string(i + 1) + ")");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return M;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

void write_matrix_csv(std::ostream& out, const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    rows.push_back(parse_row(line, line_no));
  }
  return rows_to_matrix(rows);
}

void write_model(std::ostream& out, const Model& model) {
  out << "# rgeom model v1\n";
  out << "family=" << to_string(model.spec.family) << '\n';
  out << "variance=" << format_double(model.spec.variance) << '\n';
  out << "length_scale=" << format_double(model.spec.length_scale) << '\n';
  out << "noise=" << format_double(model.noise) << '\n';
  out << "d=" << model.X.rows() << '\n';
  out << "N=" << model.X.cols() << '\n';
  out << "m=" << model.Y.rows() << '\n';
  out << "[X]\n";
  write_matrix_csv(out, model.X);
  out << "[Y]\n";
  write_matrix_csv(out, model.Y);
}

Model read_model(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::string section;
  std::vector<std::vector<double>> xrows;
  std::vector<std::vector<double>> yrows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line) || line[0] == '#') continue;
    if (line == "[X]" || line == "[Y]") {
      section = line;
      continue;
    }
    if (section.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw InputError("model: line " + std::to_string(line_no) + ": expected key=value");
      }
      header[line.substr(0, eq)] = line.substr(eq + 1);
    } else {
      (section == "[X]" ? xrows : yrows).push_back(parse_row(line, line_no));
    }
  }
  const auto get = [&](const std::string& key) {
    const auto it = header.find(key);
    if (it == header.end()) throw InputError("model: missing header key '" + key + "'");
    return it->second;
  };
  const auto get_int = [&](const std::string& key) {
    try {
      return std::stol(get(key));
    } catch (const std::logic_error&) {
      throw InputError("model: bad integer for '" + key + "'");
    }
  };
  const auto get_real = [&](const std::string& key) {
    try {
      return std::stod(get(key));
    } catch (const std::logic_error&) {
      throw InputError("model: bad number for '" + key + "'");
    }
  };

  Model model;
  model.spec.family = parse_kernel_family(get("family"));
  model.spec.variance = get_real("variance");
  model.spec.length_scale = get_real("length_scale");
  model.spec.validate();
  model.noise = get_real("noise");
  model.X = rows_to_matrix(xrows);
  model.Y = rows_to_matrix(yrows);
  const long d = get_int("d");
  const long n = get_int("N");
  const long m = get_int("m");
  if (model.X.rows() != d || model.X.cols() != n) {
    throw InputError("model: X block is not d x N");
  }
  if (model.Y.rows() != m || model.Y.cols() != n) {
    throw InputError("model: Y block is not m x N");
  }
  return model;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("model: cannot write '" + path + "'");
  write_model(out, model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("model: cannot open '" + path + "'");
  return read_model(in);
}

void write_curve_csv(std::ostream& out, const DiscreteCurve& curve) {
  out << 't';
  for (Eigen::Index a = 0; a < curve.dim(); ++a) out << ",z" << (a + 1);
  out << '\n';
  for (Eigen::Index k = 0; k < curve.num_nodes(); ++k) {
    out << format_double(curve.params[k]);
    for (Eigen::Index a = 0; a < curve.dim(); ++a) out << ',' << format_double(curve.points(a, k));
    out << '\n';
  }
}

DiscreteCurve read_curve_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("t,", 0) != 0) {
    throw InputError("curve csv: expected header 't,z1,...'");
  }
  const Matrix M = read_matrix_csv(in);
  if (M.cols() < 2) throw InputError("curve csv: need t and at least one coordinate");
  DiscreteCurve c;
  c.params = M.col(0);
  c.points = M.rightCols(M.cols() - 1).transpose();
  c.validate();
  return c;
}

void write_bound_report_csv(std::ostream& out, const BoundReport& report) {
  out << "n,L_n,l_n,stderr,rel_err,h_n,rel_err_minus_h,flag\n";
  for (const auto& r : report.rows) {
    out << r.n << ',' << format_double(r.L_n) << ',' << format_double(r.l_n) << ','
        << format_double(r.std_err) << ',' << format_double(r.rel_err) << ','
        << format_double(r.h_n) << ',' << format_double(r.rel_err - r.h_n) << ','
        << (r.flag ? 1 : 0) << '\n';
  }
}

}  // namespace rgeom::io
