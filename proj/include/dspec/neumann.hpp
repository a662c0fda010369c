#pragma once

#include <string>
#include <vector>

#include "dspec/model.hpp"

namespace dspec {

struct CellSpectrum {
    long long k = 0;
    std::vector<double> eigenvalues;  // ascending, all <= cutoff
    std::string method;               // "analytic-constant" or "shooting-affine"
};

// Neumann eigenvalues of -f'' + q f on cell k up to the cutoff.
CellSpectrum cell_neumann_eigs(const OperatorSpec& spec, int k, double cutoff);
// Same for a cell of length d given by pieces local to its left end.
CellSpectrum cell_neumann_eigs(double d, const std::vector<LocalPiece>& pieces, double cutoff);

struct DirectSumPoint {
    double lambda = 0;
    int multiplicity = 0;
    std::vector<int> cells;
};

std::vector<DirectSumPoint> direct_sum_spectrum(const OperatorSpec& spec, double cutoff, int jobs = 1);

struct LengthSet {
    std::vector<double> values;  // ascending
    std::string provenance;
};

// Cell lengths recurring infinitely often together with the nonzero accumulation points.
LengthSet compute_D(const OperatorSpec& spec);

struct EssSpectrumModel {
    std::vector<double> D;
    std::vector<double> points;
    std::string provenance;
};

// {0} together with (pi n / l)^2 for l in D, up to the cutoff.  Requires vanishing cell means of |q|.
EssSpectrumModel ess_spectrum_N(const OperatorSpec& spec, double cutoff);
// Union of the cell spectra over one period, for periodic partitions and potentials.
EssSpectrumModel periodic_ess_spectrum(const OperatorSpec& spec, double cutoff);

}  // namespace dspec
