use std::fmt;

/// Most-abundant-isotope masses, indexed by atomic number - 1.
const ELEMENTS: &[(&str, f64)] = &[
    ("H", 1.0078250320),
    ("He", 4.0026032540),
    ("Li", 7.0160045500),
    ("Be", 9.0121822000),
    ("B", 11.0093054000),
    ("C", 12.0000000000),
    ("N", 14.0030740000),
    ("O", 15.9949146200),
    ("F", 18.9984032200),
    ("Ne", 19.9924401800),
    ("Na", 22.9897692800),
    ("Mg", 23.9850417000),
    ("Al", 26.9815386300),
    ("Si", 27.9769265300),
    ("P", 30.9737616300),
    ("S", 31.9720710000),
    ("Cl", 34.9688526800),
    ("Ar", 39.9623831200),
    ("K", 38.9637066800),
    ("Ca", 39.9625909800),
    ("Sc", 44.9559119000),
    ("Ti", 47.9479463000),
    ("V", 50.9439595000),
    ("Cr", 51.9405075000),
    ("Mn", 54.9380451000),
    ("Fe", 55.9349375000),
    ("Co", 58.9331950000),
    ("Ni", 57.9353429000),
    ("Cu", 62.9295975000),
    ("Zn", 63.9291422000),
    ("Ga", 68.9255736000),
    ("Ge", 73.9211778000),
    ("As", 74.9215965000),
    ("Se", 79.9165213000),
    ("Br", 78.9183371000),
    ("Kr", 83.9115070000),
    ("Rb", 84.9117897400),
    ("Sr", 87.9056121000),
    ("Y", 88.9058483000),
    ("Zr", 89.9047044000),
    ("Nb", 92.9063781000),
    ("Mo", 97.9054082000),
    ("Tc", 96.9063650000),
    ("Ru", 101.9043493000),
    ("Rh", 102.9055040000),
    ("Pd", 105.9034860000),
    ("Ag", 106.9050970000),
    ("Cd", 113.9033585000),
    ("In", 114.9038780000),
    ("Sn", 119.9021947000),
    ("Sb", 120.9038157000),
    ("Te", 129.9062244000),
    ("I", 126.9044730000),
    ("Xe", 131.9041535000),
    ("Cs", 132.9054519000),
    ("Ba", 137.9052472000),
    ("La", 138.9063533000),
    ("Ce", 139.9054387000),
    ("Pr", 140.9076528000),
    ("Nd", 141.9077233000),
    ("Pm", 144.9127490000),
    ("Sm", 151.9197324000),
    ("Eu", 152.9212303000),
    ("Gd", 157.9241039000),
    ("Tb", 158.9253468000),
    ("Dy", 163.9291748000),
    ("Ho", 164.9303221000),
    ("Er", 165.9302931000),
    ("Tm", 168.9342133000),
    ("Yb", 173.9388621000),
    ("Lu", 174.9407718000),
    ("Hf", 179.9465500000),
    ("Ta", 180.9479958000),
    ("W", 183.9509312000),
    ("Re", 186.9557531000),
    ("Os", 191.9614807000),
    ("Ir", 192.9629264000),
    ("Pt", 194.9647911000),
    ("Au", 196.9665687000),
    ("Hg", 201.9706430000),
    ("Tl", 204.9744275000),
    ("Pb", 207.9766521000),
    ("Bi", 208.9803987000),
    ("Po", 208.9824304000),
    ("At", 209.9871480000),
    ("Rn", 222.0175706000),
];

/// A chemical element, stored as its atomic number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        if z >= 1 && (z as usize) <= ELEMENTS.len() {
            Some(Element(z))
        } else {
            None
        }
    }

    /// Looks up an element by its capitalised symbol ("C", "Cl", "Se").
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        ELEMENTS
            .iter()
            .position(|(s, _)| *s == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        ELEMENTS[self.0 as usize - 1].0
    }

    /// Mass of the most abundant isotope, in amu.
    pub fn monoisotopic_mass(self) -> f64 {
        ELEMENTS[self.0 as usize - 1].1
    }

    /// Members of the SMILES organic subset may be written without brackets.
    pub fn is_organic_subset(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// Elements that may be written in lowercase (aromatic) form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
    }

    pub fn is_halogen(self) -> bool {
        matches!(self.0, 9 | 17 | 35 | 53)
    }

    /// Neutral valences allowed by the valence model, or `None` when the
    /// element is outside the modelled set (bracket-only elements).
    pub fn default_valences(self) -> Option<&'static [u8]> {
        match self.0 {
            1 => Some(&[1]),
            5 => Some(&[3]),
            6 => Some(&[4]),
            7 | 15 | 33 => Some(&[3, 5]),
            8 => Some(&[2]),
            16 | 34 | 52 => Some(&[2, 4, 6]),
            9 | 17 | 35 | 53 => Some(&[1]),
            _ => None,
        }
    }

    /// Allowed valences once a formal charge is applied.
    ///
    /// Charges follow the isoelectronic rule: for N, O, P, S and the halogens
    /// a positive charge raises the valence and a negative one lowers it; for
    /// carbon any charge lowers it; for boron the direction is reversed.
    pub fn allowed_valences(self, charge: i8) -> Option<Vec<u8>> {
        let base = self.default_valences()?;
        let shift: i32 = match self.0 {
            6 => -(charge as i32).abs(),
            5 => -(charge as i32),
            1 => -(charge as i32).abs(),
            _ => charge as i32,
        };
        let out: Vec<u8> = base
            .iter()
            .filter_map(|&v| {
                let s = v as i32 + shift;
                (s >= 0).then_some(s as u8)
            })
            .collect();
        Some(out)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for z in 1..=86u8 {
            let e = Element::from_atomic_number(z).unwrap();
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
        }
        assert_eq!(Element::from_symbol("Cl"), Some(Element::CL));
        assert_eq!(Element::from_symbol("Xx"), None);
    }

    #[test]
    fn charged_valences() {
        assert_eq!(Element::N.allowed_valences(1).unwrap(), vec![4, 6]);
        assert_eq!(Element::O.allowed_valences(-1).unwrap(), vec![1]);
        assert_eq!(Element::C.allowed_valences(1).unwrap(), vec![3]);
        assert_eq!(Element::C.allowed_valences(-1).unwrap(), vec![3]);
        assert_eq!(Element::B.allowed_valences(-1).unwrap(), vec![4]);
        assert_eq!(Element::CL.allowed_valences(-1).unwrap(), vec![0]);
    }
}
