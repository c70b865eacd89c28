use affine_core::expansion::{CoordinateWeight, WeightSpec, gram_deviation};

fn main() {
    for shape in [1.5, 3.5, 6.0] {
        for order in [5usize, 10, 15] {
            for npts in [30usize, 40, 60, 80] {
                let w = WeightSpec { coords: vec![CoordinateWeight::Gamma { shape, scale: 0.7 }] };
                let dev = gram_deviation(&w, order, npts);
                println!("shape {shape} order {order} npts {npts}: dev {dev:.3e}");
            }
        }
    }
}
