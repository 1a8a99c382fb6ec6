#include "mse_psnr.hpp"

#include <cmath>
#include <stdexcept>

namespace negtune {

using ad::Var;

Var mse255_g(const Var& ref, const Var& dist) {
    if (!ref.value().same_shape(dist.value()))
        throw std::invalid_argument("mse: shape mismatch");
    return mean_all(square(ref - dist)) * (255.0 * 255.0);
}

MetricValue mse255(const ImageBatch& ref, const ImageBatch& dist, bool with_grad) {
    MetricValue out;
    if (with_grad) {
        Var d = Var::leaf(dist.data);
        Var m = mse255_g(Var::constant(ref.data), d);
        ad::backward(m);
        out.value = m.item();
        out.gradient = d.grad();
    } else {
        ad::NoGradGuard guard;
        out.value = mse255_g(Var::constant(ref.data), Var::constant(dist.data)).item();
    }
    return out;
}

double psnr_from_mse255(double mse) {
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double psnr_db(const ImageBatch& ref, const ImageBatch& dist) {
    return psnr_from_mse255(mse255(ref, dist).value);
}

} // namespace negtune
