#include "demn/distillation.hpp"

#include "demn/error.hpp"

namespace demn {

ad::Var distill_exposition(ad::Var exposition, ad::Var climax, ad::Var option, const DistillOptions& options,
                           DistillTrace* trace) {
    if (exposition.cols() != climax.cols() || exposition.cols() != option.cols())
        throw Error(ErrorKind::dimension_mismatch, "distill_exposition: widths " + std::to_string(exposition.cols()) +
                                                       ", " + std::to_string(climax.cols()) + ", " +
                                                       std::to_string(option.cols()));
    ad::Var e_c = attend(exposition, climax);
    ad::Var e_o = attend(exposition, option);
    ad::Var s;
    if (options.climax_aware && options.option_aware)
        s = ad::mul(ad::sub(exposition, e_c), ad::sub(exposition, e_o));
    else if (options.climax_aware)
        s = ad::sub(exposition, e_c);
    else if (options.option_aware)
        s = ad::sub(exposition, e_o);
    else
        s = exposition;
    ad::Var alpha = ad::softmax_rows(ad::matmul_nt(s, s));
    if (trace) *trace = {e_c, e_o, s, alpha};
    return ad::matmul(alpha, exposition);
}

ad::Var deem_init(ad::Var option, ad::Var distilled) { return attend(option, distilled); }

DistillParams register_distill_params(ParamStore& store, std::size_t width, Rng& rng) {
    DistillParams p;
    Tensor w = xavier_uniform(width, 1, rng);
    p.w_self = &store.add("distill.w_self", Tensor({1, width}, std::vector<double>(w.data(), w.data() + width)));
    return p;
}

ad::Var deeav_vector(ad::Var distilled, const DistillParams& params, ad::Var* weights) {
    ad::Tape& tape = *distilled.tape();
    ad::Var alpha = ad::softmax_rows(ad::matmul_nt(tape.param(*params.w_self), distilled));
    if (weights) *weights = alpha;
    return ad::matmul(alpha, distilled);
}

}  // namespace demn
