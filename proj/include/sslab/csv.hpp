#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sslab/diagnostics.hpp"
#include "sslab/gibbs.hpp"
#include "sslab/kalman.hpp"
#include "sslab/model.hpp"
#include "sslab/particle.hpp"

namespace sslab::csv {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

/// Header plus rows of numbers. Cells are parsed strictly; a bad cell raises
/// ParseError naming the source, 1-based row (header is row 1) and column.
struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws ParseError when missing.
    [[nodiscard]] std::size_t column(std::string_view name) const;
    [[nodiscard]] bool has_column(std::string_view name) const;
    [[nodiscard]] std::vector<double> values(std::string_view name) const;
};

NumericTable read_table(std::istream& in, const std::string& source);
NumericTable read_table_file(const std::string& path);

/// `t,y,theta`; theta is omitted when the series has no latent states.
void write_series(std::ostream& out, const ObservationSeries& series);
ObservationSeries read_series(std::istream& in, const std::string& source);
ObservationSeries read_series_file(const std::string& path);

/// `t,pred_mean,pred_var,predobs_mean,predobs_var,post_mean,post_var`
void write_filter_trace(std::ostream& out, const kalman::FilterTrace& trace);

/// `t,mean,var` for a list of (smoothed) beliefs indexed from 1.
void write_beliefs(std::ostream& out, const std::vector<GaussianBelief>& beliefs);

/// `t,mean,var,ess,resampled`
void write_particle_trace(std::ostream& out, const particle::ParticleTrace& trace);

/// `t,i,value,weight`
void write_ensembles(std::ostream& out, const particle::ParticleTrace& trace);

/// `iter,theta_1,...,theta_T`; iter counts retained draws from 1.
void write_gibbs_samples(std::ostream& out, const gibbs::GibbsSamples& samples);

/// `t,y,v,u,m_increment,m`
void write_doob(std::ostream& out, const diagnostics::DoobDecomposition& decomp);

}  // namespace sslab::csv
