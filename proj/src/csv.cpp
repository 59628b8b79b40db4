#include "sslab/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sslab/errors.hpp"

namespace sslab::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_cell(const std::string& cell, const std::string& source, std::size_t row,
                  const std::string& column) {
    const std::string text = trim(cell);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError(source + ": row " + std::to_string(row) + ", column '" + column +
                         "': not a number: '" + text + "'");
    }
    return value;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return in;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

std::size_t NumericTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError("missing column '" + std::string(name) + "'");
}

bool NumericTable::has_column(std::string_view name) const {
    for (const auto& h : header) {
        if (h == name) return true;
    }
    return false;
}

std::vector<double> NumericTable::values(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

NumericTable read_table(std::istream& in, const std::string& source) {
    NumericTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source + ": empty file, expected a header row");
    }
    for (auto& h : split_line(line)) table.header.push_back(trim(h));

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw ParseError(source + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(table.header.size()));
        }
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            values[c] = parse_cell(cells[c], source, row, table.header[c]);
        }
        table.rows.push_back(std::move(values));
    }
    return table;
}

NumericTable read_table_file(const std::string& path) {
    auto in = open_input(path);
    return read_table(in, path);
}

void write_series(std::ostream& out, const ObservationSeries& series) {
    series.validate();
    const bool with_theta = series.latent_states.has_value();
    out << (with_theta ? "t,y,theta\n" : "t,y\n");
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << (i + 1) << ',' << format_double(series.observations[i]);
        if (with_theta) out << ',' << format_double((*series.latent_states)[i]);
        out << '\n';
    }
}

ObservationSeries read_series(std::istream& in, const std::string& source) {
    const NumericTable table = read_table(in, source);
    if (table.header.size() < 2 || table.header[0] != "t" || table.header[1] != "y") {
        throw ParseError(source + ": expected header 't,y' or 't,y,theta'");
    }
    const bool with_theta = table.has_column("theta");
    ObservationSeries series;
    std::vector<double> theta;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row[0] != static_cast<double>(r + 1)) {
            throw ParseError(source + ": row " + std::to_string(r + 2) +
                             ", column 't': expected " + std::to_string(r + 1));
        }
        series.observations.push_back(row[1]);
        if (with_theta) theta.push_back(row[table.column("theta")]);
    }
    if (with_theta) series.latent_states = std::move(theta);
    return series;
}

ObservationSeries read_series_file(const std::string& path) {
    auto in = open_input(path);
    return read_series(in, path);
}

void write_filter_trace(std::ostream& out, const kalman::FilterTrace& trace) {
    out << "t,pred_mean,pred_var,predobs_mean,predobs_var,post_mean,post_var\n";
    for (const auto& r : trace.records) {
        out << r.t << ',' << format_double(r.predicted.mean) << ','
            << format_double(r.predicted.variance) << ',' << format_double(r.predictive_obs.mean)
            << ',' << format_double(r.predictive_obs.variance) << ','
            << format_double(r.posterior.mean) << ',' << format_double(r.posterior.variance)
            << '\n';
    }
}

void write_beliefs(std::ostream& out, const std::vector<GaussianBelief>& beliefs) {
    out << "t,mean,var\n";
    for (std::size_t i = 0; i < beliefs.size(); ++i) {
        out << (i + 1) << ',' << format_double(beliefs[i].mean) << ','
            << format_double(beliefs[i].variance) << '\n';
    }
}

void write_particle_trace(std::ostream& out, const particle::ParticleTrace& trace) {
    out << "t,mean,var,ess,resampled\n";
    for (const auto& r : trace.records) {
        out << r.t << ',' << format_double(r.mean) << ',' << format_double(r.variance) << ','
            << format_double(r.ess) << ',' << (r.resampled ? 1 : 0) << '\n';
    }
}

void write_ensembles(std::ostream& out, const particle::ParticleTrace& trace) {
    out << "t,i,value,weight\n";
    for (std::size_t t = 0; t < trace.ensembles.size(); ++t) {
        const auto& e = trace.ensembles[t];
        for (std::size_t i = 0; i < e.size(); ++i) {
            out << t << ',' << (i + 1) << ',' << format_double(e.values()[i]) << ','
                << format_double(e.weights()[i]) << '\n';
        }
    }
}

void write_gibbs_samples(std::ostream& out, const gibbs::GibbsSamples& samples) {
    out << "iter";
    for (std::size_t j = 1; j <= samples.dims(); ++j) out << ",theta_" << j;
    out << '\n';
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        out << (i + 1);
        for (double x : samples.row(i)) out << ',' << format_double(x);
        out << '\n';
    }
}

void write_doob(std::ostream& out, const diagnostics::DoobDecomposition& decomp) {
    out << "t,y,v,u,m_increment,m\n";
    for (std::size_t i = 0; i < decomp.size(); ++i) {
        out << (i + 1) << ',' << format_double(decomp.y[i]) << ',' << format_double(decomp.v[i])
            << ',' << format_double(decomp.u[i]) << ',' << format_double(decomp.m_increment[i])
            << ',' << format_double(decomp.m[i]) << '\n';
    }
}

}  // namespace sslab::csv
