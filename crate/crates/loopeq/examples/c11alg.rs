use loopeq::algebra::{AlgebraicFn, BranchCut, PolyZ};
use loopeq::jet::Jet;
use loopeq::model::{build_field, AdmissibilityParams};

fn main() {
    for order in [4usize, 5] {
        let f = build_field(&[0.0, 0.0, 0.0, 0.0], 8, order, &AdmissibilityParams::default()).unwrap();
        let space = f.space().clone();
        let alpha = Jet::from_re(&space, -2.0);
        let beta = Jet::from_re(&space, 2.0);
        let branch = BranchCut::new(alpha, beta);
        let s_poly = branch.s_poly();
        let vp = f.vprime();
        let vr = AlgebraicFn::new(branch, PolyZ::zero(&space), vp.clone(), s_poly).unwrap();
        let ser = vr.laurent_expand(2);
        let h = ser.plus_part();
        let d = h.degree().unwrap_or(0);
        let o0: Vec<String> = (0..=d).map(|k| format!("{:.2e}", h.coeff(k).order0().norm())).collect();
        println!("order {order}: vp deg {:?}, series top {} bottom {}, h deg {d} order0 {o0:?}",
            vp.degree(), ser.top_power(), ser.bottom_power());
    }
}
