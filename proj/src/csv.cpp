#include "fedprov/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace fedprov {

std::string csv_header() {
  std::string h;
  for (auto name : kFeatureNames) {
    h += name;
    h += ',';
  }
  h += "diabetes,province";
  return h;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << csv_header() << '\n';
  for (const auto& r : ds.records) {
    const PartialRow row = encode_features(r);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (row[f]) {
        if (is_continuous(f)) {
          out << format_double(*row[f]);
        } else {
          out << (*row[f] > 0.5 ? '1' : '0');
        }
      }
      out << ',';
    }
    out << (r.diabetes ? '1' : '0') << ',' << to_string(r.province) << '\n';
  }
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(ds, out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

[[noreturn]] void row_error(std::size_t line_no, const std::string& what) {
  throw ValidationError("line " + std::to_string(line_no) + ": " + what);
}

double parse_number(std::string_view field, std::size_t line_no, std::string_view name) {
  double value = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    row_error(line_no, "field '" + std::string(name) + "' is not a number: '" +
                           std::string(field) + "'");
  }
  return value;
}

bool parse_binary(std::string_view field, std::size_t line_no, std::string_view name) {
  if (field == "0") return false;
  if (field == "1") return true;
  row_error(line_no, "field '" + std::string(name) + "' must be 0 or 1, got '" +
                         std::string(field) + "'");
}

}  // namespace

Dataset read_csv(std::istream& in, std::string provenance) {
  Dataset ds{{}, std::move(provenance)};
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV: header row missing");
  const std::string expected = csv_header();
  std::string_view header = strip_cr(line);
  if (header.size() >= 3 && header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
  if (header != expected) {
    throw ValidationError("CSV header mismatch: expected '" + expected + "', found '" +
                          std::string(header) + "'");
  }
  constexpr std::size_t kColumns = kNumFeatures + 2;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = strip_cr(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (fields.size() != kColumns) {
      row_error(line_no, "expected " + std::to_string(kColumns) + " fields, found " +
                             std::to_string(fields.size()));
    }
    std::array<std::optional<double>, kNumFeatures> row;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const auto name = kFeatureNames[f];
      if (fields[f].empty()) {
        if (!is_optional(f)) row_error(line_no, "required field '" + std::string(name) + "' is empty");
        continue;
      }
      row[f] = is_continuous(f) ? parse_number(fields[f], line_no, name)
                                : (parse_binary(fields[f], line_no, name) ? 1.0 : 0.0);
    }
    PatientRecord r;
    r.age_years = *row[kAge];
    r.sex_male = *row[kSexMale] > 0.5;
    r.sbp_mmHg = *row[kSbp];
    r.bmi_kg_m2 = row[kBmi];
    r.ldl_mmol_L = row[kLdl];
    r.hdl_mmol_L = row[kHdl];
    r.hba1c_pct = row[kHba1c];
    r.tg_mmol_L = row[kTg];
    r.hypertension = *row[kHypertension] > 0.5;
    r.depression = *row[kDepression] > 0.5;
    r.osteoarthritis = *row[kOsteoarthritis] > 0.5;
    r.copd = *row[kCopd] > 0.5;
    r.htn_med = *row[kHtnMed] > 0.5;
    r.corticosteroids = *row[kCorticosteroids] > 0.5;
    r.diabetes = parse_binary(fields[kNumFeatures], line_no, "diabetes");
    try {
      r.province = parse_province(fields[kNumFeatures + 1]);
      validate(r);
    } catch (const ValidationError& e) {
      row_error(line_no, e.what());
    }
    ds.records.push_back(r);
  }
  return ds;
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_csv(in, path.filename().string());
}

}  // namespace fedprov
