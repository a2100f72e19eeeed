#include "relkit/network.hpp"

namespace relkit {

template class BasicTensor<double>;

}  // namespace relkit
