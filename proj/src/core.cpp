#include "cpdcond/core.hpp"

namespace cpdcond {

void Shape::validate() const {
  if (order() < 2) throw ShapeError("tensor order must be at least 2");
  for (int n : dims) {
    if (n < 2) throw ShapeError("every dimension must be at least 2");
  }
  if (rank < 1) throw ShapeError("rank must be at least 1");
}

std::int64_t linear_index(const std::vector<int>& dims, const std::vector<int>& idx) {
  if (idx.size() != dims.size()) throw ShapeError("index arity does not match tensor order");
  std::int64_t li = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= dims[k]) throw ShapeError("index out of range");
    li = li * dims[k] + idx[k];
  }
  return li;
}

Eigen::VectorXd kron_vectors(const std::vector<Eigen::VectorXd>& vs) {
  if (vs.empty()) throw ShapeError("kron_vectors: empty list");
  Eigen::VectorXd x = vs.front();
  for (std::size_t k = 1; k < vs.size(); ++k) {
    const Eigen::VectorXd& v = vs[k];
    Eigen::VectorXd y(x.size() * v.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y.segment(i * v.size(), v.size()) = x[i] * v;
    x = std::move(y);
  }
  return x;
}

Params vecr(const std::vector<Representative>& reps, const Shape& shape) {
  shape.validate();
  if (static_cast<int>(reps.size()) != shape.rank)
    throw ShapeError("vecr: number of representatives does not match rank");
  const int d = shape.order();
  Params p;
  p.shape = shape;
  p.data.resize(shape.param_count());
  Eigen::Index off = 0;
  for (const Representative& rep : reps) {
    if (static_cast<int>(rep.size()) != d)
      throw ShapeError("vecr: representative has wrong number of factors");
    for (int k = 0; k < d; ++k) {
      if (rep[k].size() != shape.dims[k])
        throw ShapeError("vecr: factor vector length does not match shape");
      p.data.segment(off, rep[k].size()) = rep[k];
      off += rep[k].size();
    }
  }
  return p;
}

std::vector<Representative> unvecr(const Params& p) {
  p.shape.validate();
  if (p.data.size() != p.shape.param_count())
    throw ShapeError("unvecr: data length does not match shape");
  std::vector<Representative> reps(p.shape.rank);
  Eigen::Index off = 0;
  for (int i = 0; i < p.shape.rank; ++i) {
    reps[i].resize(p.shape.order());
    for (int k = 0; k < p.shape.order(); ++k) {
      reps[i][k] = p.data.segment(off, p.shape.dims[k]);
      off += p.shape.dims[k];
    }
  }
  return reps;
}

Shape shape_of(const Factors& factors) {
  if (factors.size() < 2) throw ShapeError("need at least 2 factor matrices");
  Shape shape;
  shape.rank = static_cast<int>(factors.front().cols());
  for (const Eigen::MatrixXd& f : factors) {
    if (f.cols() != shape.rank) throw ShapeError("factor matrices disagree on rank");
    shape.dims.push_back(static_cast<int>(f.rows()));
  }
  shape.validate();
  return shape;
}

Params params_from_factors(const Factors& factors) {
  const Shape shape = shape_of(factors);
  std::vector<Representative> reps(shape.rank);
  for (int i = 0; i < shape.rank; ++i) {
    for (const Eigen::MatrixXd& f : factors) reps[i].push_back(f.col(i));
  }
  return vecr(reps, shape);
}

Factors factors_from_params(const Params& p) {
  const std::vector<Representative> reps = unvecr(p);
  Factors factors(p.shape.order());
  for (int k = 0; k < p.shape.order(); ++k) {
    factors[k].resize(p.shape.dims[k], p.shape.rank);
    for (int i = 0; i < p.shape.rank; ++i) factors[k].col(i) = reps[i][k];
  }
  return factors;
}

DenseTensor rank_one(const Representative& rep) {
  if (rep.empty()) throw ShapeError("rank_one: empty representative");
  DenseTensor t;
  for (const Eigen::VectorXd& v : rep) t.dims.push_back(static_cast<int>(v.size()));
  t.values = kron_vectors(rep);
  return t;
}

DenseTensor cpdgen(const Params& p) {
  const std::vector<Representative> reps = unvecr(p);
  DenseTensor t;
  t.dims = p.shape.dims;
  t.values = Eigen::VectorXd::Zero(p.shape.num_entries());
  for (const Representative& rep : reps) t.values += kron_vectors(rep);
  return t;
}

DenseTensor cpdgen(const Factors& factors) { return cpdgen(params_from_factors(factors)); }

double frobenius_norm(const DenseTensor& t) { return t.values.norm(); }

}  // namespace cpdcond
