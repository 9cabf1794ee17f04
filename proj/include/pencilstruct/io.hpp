#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pencilstruct/analysis.hpp"
#include "pencilstruct/types.hpp"

namespace pencilstruct {

using nlohmann::json;

// On-disk pencil document: dense complex arrays with [re, im] entries.
struct PencilDocument {
  Index m = 0, n = 0;
  ComplexMatrix A, E;
  bool has_lambda0 = false;
  Complex lambda0{0.0, 0.0};
  json metadata;
};

namespace io_detail {

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InputError("expected complex entry as [re, im]");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const json& j, Index m, Index n, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != m)
    throw InputError(std::string(name) + ": expected " + std::to_string(m) + " rows");
  ComplexMatrix out(m, n);
  for (Index i = 0; i < m; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n)
      throw InputError(std::string(name) + ": row " + std::to_string(i) + " has wrong length");
    for (Index c = 0; c < n; ++c) out(i, c) = complex_from_json(row[static_cast<size_t>(c)]);
  }
  return out;
}

}  // namespace io_detail

inline json pencil_document_to_json(const PencilDocument& doc) {
  json j;
  j["m"] = doc.m;
  j["n"] = doc.n;
  j["A"] = io_detail::matrix_to_json(doc.A);
  j["E"] = io_detail::matrix_to_json(doc.E);
  if (doc.has_lambda0) j["lambda0"] = io_detail::complex_to_json(doc.lambda0);
  if (!doc.metadata.is_null()) j["metadata"] = doc.metadata;
  return j;
}

inline PencilDocument pencil_document_from_json(const json& j) {
  PencilDocument doc;
  if (!j.is_object() || !j.contains("m") || !j.contains("n") || !j.contains("A") || !j.contains("E"))
    throw InputError("pencil document: need fields m, n, A, E");
  doc.m = j["m"].get<Index>();
  doc.n = j["n"].get<Index>();
  if (doc.m < 0 || doc.n < 0) throw InputError("pencil document: negative dimensions");
  doc.A = io_detail::matrix_from_json(j["A"], doc.m, doc.n, "A");
  doc.E = io_detail::matrix_from_json(j["E"], doc.m, doc.n, "E");
  if (j.contains("lambda0")) {
    doc.lambda0 = io_detail::complex_from_json(j["lambda0"]);
    doc.has_lambda0 = true;
  }
  if (j.contains("metadata")) doc.metadata = j["metadata"];
  if (!all_finite(doc.A) || !all_finite(doc.E))
    throw InputError("pencil document: non-finite entries");
  return doc;
}

inline void write_pencil_document(const std::string& path, const PencilDocument& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << pencil_document_to_json(doc).dump(1) << "\n";
}

inline PencilDocument read_pencil_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError(std::string("JSON parse failure in ") + path + ": " + e.what());
  }
  return pencil_document_from_json(j);
}

// Matrix Market, dense "array" and sparse "coordinate" formats, real or
// complex, general symmetry only.
inline ComplexMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw InputError(path + ": missing MatrixMarket header");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (object != "matrix" || (format != "array" && format != "coordinate") ||
      (field != "real" && field != "complex" && field != "integer") ||
      (symmetry != "general"))
    throw InputError(path + ": unsupported MatrixMarket type '" + header + "'");

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);
  Index m = 0, n = 0;
  long long nnz = 0;
  if (format == "array") {
    if (!(sizes >> m >> n)) throw InputError(path + ": bad size line");
  } else {
    if (!(sizes >> m >> n >> nnz)) throw InputError(path + ": bad size line");
  }
  if (m < 0 || n < 0) throw InputError(path + ": negative dimensions");
  ComplexMatrix out = ComplexMatrix::Zero(m, n);

  const bool complex_field = (field == "complex");
  if (format == "array") {
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < m; ++i) {
        double re = 0, im = 0;
        if (!(in >> re)) throw InputError(path + ": truncated array data");
        if (complex_field && !(in >> im)) throw InputError(path + ": truncated complex data");
        out(i, j) = Complex(re, im);
      }
    }
  } else {
    for (long long e = 0; e < nnz; ++e) {
      Index i = 0, j = 0;
      double re = 0, im = 0;
      if (!(in >> i >> j >> re)) throw InputError(path + ": truncated coordinate data");
      if (complex_field && !(in >> im)) throw InputError(path + ": truncated complex data");
      if (i < 1 || i > m || j < 1 || j > n) throw InputError(path + ": entry out of range");
      out(i - 1, j - 1) = Complex(re, im);
    }
  }
  if (!all_finite(out)) throw InputError(path + ": non-finite entries");
  return out;
}

inline void write_matrix_market(const std::string& path, const ComplexMatrix& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << "%%MatrixMarket matrix array complex general\n";
  out << m.rows() << " " << m.cols() << "\n";
  out.precision(17);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      out << m(i, j).real() << " " << m(i, j).imag() << "\n";
}

// Parses "a+bi" style complex literals: "0", "1.5", "-2i", "1+2i", "3-0.5i".
inline Complex parse_complex(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw InputError("empty complex literal");

  auto parse_real = [](const std::string& str, size_t& pos) -> double {
    size_t used = 0;
    double v;
    try {
      v = std::stod(str.substr(pos), &used);
    } catch (const std::exception&) {
      throw InputError("bad complex literal");
    }
    pos += used;
    return v;
  };

  size_t pos = 0;
  double first;
  bool first_imag = false;
  if (s[pos] == 'i' || (s[pos] == '+' && pos + 1 < s.size() && s[pos + 1] == 'i') ||
      (s[pos] == '-' && pos + 1 < s.size() && s[pos + 1] == 'i')) {
    first = s[pos] == '-' ? -1.0 : 1.0;
    pos = s.find('i', pos) + 1;
    first_imag = true;
  } else {
    first = parse_real(s, pos);
    if (pos < s.size() && s[pos] == 'i') {
      ++pos;
      first_imag = true;
    }
  }
  if (pos == s.size()) return first_imag ? Complex(0.0, first) : Complex(first, 0.0);
  if (first_imag) throw InputError("bad complex literal: " + text);

  double second;
  if ((s[pos] == '+' || s[pos] == '-') && pos + 1 < s.size() && s[pos + 1] == 'i') {
    second = s[pos] == '-' ? -1.0 : 1.0;
    pos += 2;
  } else {
    second = parse_real(s, pos);
  }
  if (pos >= s.size() || s[pos] != 'i' || pos + 1 != s.size())
    throw InputError("bad complex literal: " + text);
  return Complex(first, second);
}

inline json poly_matrix_to_json(const PolyMatrix& p) {
  json j;
  j["lambda0"] = io_detail::complex_to_json(p.lambda0);
  j["rows"] = p.rows();
  j["cols"] = p.cols();
  json coeffs = json::array();
  for (const auto& c : p.coeffs) coeffs.push_back(io_detail::matrix_to_json(c));
  j["coeffs"] = coeffs;
  return j;
}

inline json rank_decision_to_json(const RankDecision& d) {
  return json{{"rank", d.rank},
              {"tolerance_used", d.tolerance_used},
              {"smallest_accepted", d.smallest_accepted},
              {"largest_rejected", d.largest_rejected}};
}

inline json report_to_json(const StructureReport& rep, bool expand_monomial = false) {
  json j;
  j["m"] = rep.m;
  j["n"] = rep.n;
  j["lambda0"] = io_detail::complex_to_json(rep.lambda0);
  j["norm_scale"] = rep.norm_scale;
  j["tol"] = rep.tol_used;

  j["indices"] = {{"right_minimal", rep.indices.right_minimal},
                  {"left_minimal", rep.indices.left_minimal},
                  {"partial_multiplicities", rep.indices.partial_multiplicities},
                  {"normal_rank", rep.indices.normal_rank}};
  j["staircase"] = {{"s", rep.s}, {"t", rep.t}};
  j["split"] = {{"s_red", rep.s_red}, {"t_red", rep.t_red}, {"s_blue", rep.s_blue}, {"t_blue", rep.t_blue}};

  auto emit_poly = [&](const PolyMatrix& p) {
    return poly_matrix_to_json(expand_monomial ? to_monomial_basis(p) : p);
  };
  j["minimal_basis"] = emit_poly(rep.basis.N);
  j["minimal_basis"]["degrees"] = rep.basis.degrees;
  json roots = json::array();
  for (size_t i = 0; i < rep.roots.vectors.size(); ++i) {
    json q = emit_poly(rep.roots.vectors[i]);
    q["order"] = rep.roots.orders[i];
    roots.push_back(std::move(q));
  }
  j["root_polynomials"] = std::move(roots);
  j["right_inverse"] = emit_poly(rep.rinv.R);
  j["right_inverse"]["frame"] = "bidiagonal";
  j["left_minimal_basis"] = emit_poly(rep.left_basis.N);
  j["left_minimal_basis"]["degrees"] = rep.left_basis.degrees;

  j["residuals"] = {{"eps_kappa", rep.residuals.eps_kappa}, {"back", rep.residuals.back},
                    {"off", rep.residuals.off},             {"resN", rep.residuals.resN},
                    {"normN", rep.residuals.normN},         {"resR", rep.residuals.resR},
                    {"normR", rep.residuals.normR}};
  j["refinement"] = {{"iterations", rep.refinement_iterations},
                     {"off_norm_initial", rep.off_norm_initial},
                     {"off_norm_final", rep.off_norm_final},
                     {"diverged", rep.refine_diverged}};

  json margins = json::array();
  for (const auto& d : rep.col_decisions) margins.push_back(rank_decision_to_json(d));
  j["rank_margins"] = {{"column_steps", margins}, {"tail", rank_decision_to_json(rep.tail_decision)}};
  json rmargins = json::array();
  for (const auto& d : rep.row_decisions) rmargins.push_back(rank_decision_to_json(d));
  j["rank_margins"]["row_steps"] = rmargins;

  if (rep.oracle_run) {
    j["toeplitz"] = {{"mu", rep.oracle.mu},
                     {"nu", rep.oracle.nu},
                     {"r", rep.oracle.r},
                     {"m_counts", rep.oracle.m_counts},
                     {"n_counts", rep.oracle.n_counts},
                     {"e_counts", rep.oracle.e_counts},
                     {"normal_rank", rep.oracle.normal_rank},
                     {"complete", rep.oracle.complete}};
  }
  return j;
}

}  // namespace pencilstruct
