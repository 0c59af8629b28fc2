#ifndef OPDYN_RATES_HPP
#define OPDYN_RATES_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace opdyn {

// Raised when an Exponential-family rate is evaluated outside the safe range;
// the a priori bounds keep simulated pressures far below it, so hitting this
// signals a bug upstream rather than a recoverable condition.
class rate_overflow_error : public std::runtime_error {
 public:
  explicit rate_overflow_error(double x)
      : std::runtime_error("rate evaluation overflow at x=" + std::to_string(x)),
        argument(x) {}
  double argument;
};

enum class RateFamily { tanh_plus_one, exponential, affine_odd };

// A jump-rate family phi together with every derived quantity the rest of the
// toolkit consumes:
//   big_phi(r)          = phi(r) + phi(-r)
//   m_less(l)           = sup { big_phi(r) : r in [0,l] }
//   m_greater(l)        = inf { big_phi(r) : r > l }
//   m_greater_inverse(y)= inf { r >= 0 : m_greater(r) >= y }  (may be
//                         unreachable when big_phi is bounded)
//   lipschitz_bound(r)  = a Lipschitz constant of phi on [-r, r]
//
// tanh_plus_one and exponential use closed forms; affine_odd (phi = f + B
// with user-supplied odd f) evaluates sup/inf on geometrically refined grids.
class RateFunction {
 public:
  static RateFunction tanh_plus_one();
  static RateFunction exponential();
  // phi(x) = f(x) + b with f odd, f(0) = 0, 0 < f' and f' strictly
  // decreasing on [0,inf), f <= b. These hypotheses are spot-checked on a
  // grid at construction; violations throw std::invalid_argument.
  static RateFunction affine_odd(std::function<double(double)> f,
                                 std::function<double(double)> f_prime,
                                 double b);

  double phi(double x) const;

  // {phi(x), phi(-x)} with a single odd-part evaluation for odd-plus-constant
  // families.
  std::pair<double, double> phi_pair(double x) const;

  double big_phi(double r) const;
  double m_less(double l) const;
  double m_greater(double l) const;
  std::optional<double> m_greater_inverse(double y) const;
  bool m_greater_diverges() const;
  double lipschitz_bound(double r) const;

  RateFamily family() const { return family_; }
  // True for tanh_plus_one and affine_odd: phi = f + B with f odd.
  bool odd_plus_constant() const { return family_ != RateFamily::exponential; }
  double offset() const;                       // B
  double odd_part(double x) const;             // f(x)
  double odd_part_derivative(double x) const;  // f'(x)
  std::string name() const;

 private:
  RateFunction(RateFamily family, std::function<double(double)> f,
               std::function<double(double)> f_prime, double b)
      : family_(family), b_(b), f_(std::move(f)), f_prime_(std::move(f_prime)) {}

  void validate_affine_odd() const;
  double grid_sup_big_phi(double lo, double hi) const;
  double grid_sup_derivative(double hi) const;

  RateFamily family_;
  double b_ = 0.0;
  std::function<double(double)> f_;
  std::function<double(double)> f_prime_;
};

}  // namespace opdyn

#endif  // OPDYN_RATES_HPP
