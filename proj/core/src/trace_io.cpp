#include "twinfeed/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "byte_io.hpp"
#include "twinfeed/error.hpp"

namespace twinfeed {

namespace {

constexpr char kMagic[4] = {'C', 'T', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr char kTextHeader[] = "t,rx,tx,re,im";
constexpr char kPeriodKey[] = "# sample_period=";

ChannelTrace read_binary(std::istream& is) {
  const auto version = detail::get_u32(is, "version");
  if (version != kVersion) {
    throw ParseError("trace: unsupported version " + std::to_string(version));
  }
  ChannelTrace trace;
  trace.n_r = detail::get_u32(is, "n_r");
  trace.n_t = detail::get_u32(is, "n_t");
  const auto n_samples = detail::get_u64(is, "n_samples");
  trace.sample_period = detail::get_f64(is, "sample_period");
  trace.source_tag = "ctrc";
  if (trace.n_r == 0 || trace.n_t == 0) throw ParseError("trace: zero antenna count in header");
  if (n_samples == 0) throw ParseError("trace: no samples");
  if (!(trace.sample_period > 0.0)) throw ParseError("trace: non-positive sample period");

  trace.samples.reserve(n_samples);
  for (std::uint64_t t = 0; t < n_samples; ++t) {
    ChannelMatrix m(trace.n_r, trace.n_t, static_cast<std::int64_t>(t));
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double re = detail::get_f64(is, "sample data");
      const double im = detail::get_f64(is, "sample data");
      if (!std::isfinite(re) || !std::isfinite(im)) {
        throw ParseError("trace: non-finite entry in sample " + std::to_string(t));
      }
      m[i] = {re, im};
    }
    trace.samples.push_back(std::move(m));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ParseError("trace: trailing bytes after " + std::to_string(n_samples) + " samples");
  }
  return trace;
}

struct TextRow {
  std::int64_t t;
  std::int64_t rx;
  std::int64_t tx;
  double re;
  double im;
};

template <typename T>
T parse_field(std::string_view field, std::size_t line_no) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("trace: bad field '" + std::string(field) + "' on row " +
                     std::to_string(line_no));
  }
  return value;
}

TextRow parse_row(const std::string& line, std::size_t line_no) {
  std::vector<std::string_view> fields;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    fields.push_back(rest.substr(0, comma));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (fields.size() != 5) {
    throw ParseError("trace: expected 5 fields on row " + std::to_string(line_no));
  }
  TextRow row{parse_field<std::int64_t>(fields[0], line_no),
              parse_field<std::int64_t>(fields[1], line_no),
              parse_field<std::int64_t>(fields[2], line_no), parse_field<double>(fields[3], line_no),
              parse_field<double>(fields[4], line_no)};
  if (!std::isfinite(row.re) || !std::isfinite(row.im)) {
    throw ParseError("trace: non-finite entry on row " + std::to_string(line_no));
  }
  if (row.rx < 0 || row.tx < 0) {
    throw ParseError("trace: negative antenna index on row " + std::to_string(line_no));
  }
  return row;
}

ChannelTrace read_text(std::istream& is) {
  ChannelTrace trace;
  trace.source_tag = "csv";
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::pair<TextRow, std::size_t>> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind(kPeriodKey, 0) == 0) {
      trace.sample_period =
          parse_field<double>(std::string_view(line).substr(sizeof(kPeriodKey) - 1), line_no);
      if (!(trace.sample_period > 0.0)) throw ParseError("trace: non-positive sample period");
      continue;
    }
    if (line[0] == '#') continue;
    if (!have_header) {
      if (line != kTextHeader) {
        throw ParseError("trace: malformed header on row " + std::to_string(line_no) +
                         ", expected '" + kTextHeader + "'");
      }
      have_header = true;
      continue;
    }
    rows.emplace_back(parse_row(line, line_no), line_no);
  }
  if (!have_header && rows.empty()) throw ParseError("trace: no samples");
  if (rows.empty()) throw ParseError("trace: no samples");

  std::int64_t max_rx = 0;
  std::int64_t max_tx = 0;
  for (const auto& [row, _] : rows) {
    max_rx = std::max(max_rx, row.rx);
    max_tx = std::max(max_tx, row.tx);
  }
  trace.n_r = static_cast<std::size_t>(max_rx + 1);
  trace.n_t = static_cast<std::size_t>(max_tx + 1);
  const std::size_t per_sample = trace.n_r * trace.n_t;
  if (rows.size() % per_sample != 0) {
    throw ParseError("trace: row count " + std::to_string(rows.size()) +
                     " is not a multiple of n_r*n_t=" + std::to_string(per_sample) +
                     " (incomplete matrix ending on row " + std::to_string(rows.back().second) +
                     ")");
  }

  const std::size_t n_samples = rows.size() / per_sample;
  trace.samples.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::int64_t t = rows[s * per_sample].first.t;
    if (s > 0 && t != trace.samples.back().time_index() + 1) {
      throw ParseError("trace: time index not consecutive on row " +
                       std::to_string(rows[s * per_sample].second));
    }
    ChannelMatrix m(trace.n_r, trace.n_t, t);
    for (std::size_t i = 0; i < per_sample; ++i) {
      const auto& [row, no] = rows[s * per_sample + i];
      const auto rx = static_cast<std::int64_t>(i / trace.n_t);
      const auto tx = static_cast<std::int64_t>(i % trace.n_t);
      if (row.t != t || row.rx != rx || row.tx != tx) {
        throw ParseError("trace: dimension mismatch on row " + std::to_string(no) +
                         ", expected t=" + std::to_string(t) + " rx=" + std::to_string(rx) +
                         " tx=" + std::to_string(tx));
      }
      m[i] = {row.re, row.im};
    }
    trace.samples.push_back(std::move(m));
  }
  return trace;
}

}  // namespace

ChannelTrace read_trace(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  const auto got = is.gcount();
  if (got == 0) throw ParseError("trace: no samples");
  if (got == 4 && std::equal(magic, magic + 4, kMagic)) {
    auto trace = read_binary(is);
    trace.validate();
    return trace;
  }
  is.clear();
  is.seekg(0);
  auto trace = read_text(is);
  trace.validate();
  return trace;
}

ChannelTrace load_trace(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open trace file " + path.string());
  return read_trace(is);
}

void write_trace_binary(const ChannelTrace& trace, std::ostream& os) {
  os.write(kMagic, 4);
  detail::put_u32(os, kVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(trace.n_r));
  detail::put_u32(os, static_cast<std::uint32_t>(trace.n_t));
  detail::put_u64(os, trace.size());
  detail::put_f64(os, trace.sample_period);
  for (const auto& m : trace.samples) {
    for (const auto& z : m.entries()) {
      detail::put_f64(os, z.real());
      detail::put_f64(os, z.imag());
    }
  }
}

void write_trace_text(const ChannelTrace& trace, std::ostream& os) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s%.17g\n", kPeriodKey, trace.sample_period);
  os << buf << kTextHeader << '\n';
  for (const auto& m : trace.samples) {
    for (std::size_t rx = 0; rx < m.n_r(); ++rx) {
      for (std::size_t tx = 0; tx < m.n_t(); ++tx) {
        std::snprintf(buf, sizeof(buf), "%lld,%zu,%zu,%.17g,%.17g\n",
                      static_cast<long long>(m.time_index()), rx, tx, m(rx, tx).real(),
                      m(rx, tx).imag());
        os << buf;
      }
    }
  }
}

void save_trace(const ChannelTrace& trace, const std::filesystem::path& path,
                TraceFormat format) {
  trace.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open trace file for writing: " + path.string());
  if (format == TraceFormat::binary) {
    write_trace_binary(trace, os);
  } else {
    write_trace_text(trace, os);
  }
  os.flush();
  if (!os) throw IoError("failed writing trace file " + path.string());
}

}  // namespace twinfeed
