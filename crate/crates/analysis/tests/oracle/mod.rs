//! Five fixed synthetic datasets with statistics computed independently by
//! SciPy.

pub struct Oracle {
    pub groups: &'static [&'static [f64]],
    /// (W, p) per group.
    pub shapiro: &'static [(f64, f64)],
    pub bartlett: (f64, f64),
    pub anova: (f64, f64),
    /// (later, earlier, difference, ci low, ci high, p).
    pub pairs: &'static [(usize, usize, f64, f64, f64, f64)],
}

pub const DATASETS: [Oracle; 5] = [
    Oracle {
        groups: &[&[0.3331, 0.3086, 0.362, 0.2068, 0.3728, 0.3243, 0.2919, 0.3579], &[0.4739, 0.6173, 0.5715, 0.6628, 0.6654, 0.5558, 0.5553, 0.5124, 0.567], &[0.7956, 0.8386, 0.7883, 0.7728, 0.7006, 0.7857, 0.7047, 0.7892]],
        shapiro: &[(0.8716747962690544, 0.15651168142087057), (0.941318730902459, 0.5958471728719097), (0.8644947897417057, 0.13306650243777685)],
        bartlett: (0.6869219861369662, 0.7093111486562067),
        anova: (133.34122658996145, 5.035298598006391e-13),
        pairs: &[(1, 0, 0.2560361111111111, 0.1882134197699143, 0.32385880245230786, 9.238820375401247e-09), (2, 0, 0.45226249999999996, 0.38247352636656595, 0.522051473633434, 2.765565554341265e-13), (2, 1, 0.19622638888888888, 0.1284036975476921, 0.26404908023008566, 8.159670151774989e-07)],
    },
    Oracle {
        groups: &[&[0.4757, 0.6027, 0.5243, 0.6643, 0.451, 0.5907, 0.527, 0.7036], &[0.2846, 0.6249, 0.3972, 0.4158, 0.5178, 0.3387, 0.3767, 0.4593, 0.4813], &[0.3516, 0.4752, 0.5625, 0.5642, 0.5005, 0.5795, 0.5184, 0.7208], &[0.4329, 0.5371, 0.4712, 0.6325, 0.4134, 0.6352, 0.3866, 0.366]],
        shapiro: &[(0.9572367207334155, 0.7834050160656956), (0.9823718019390133, 0.9753565236908188), (0.949618038967899, 0.7073796248590639), (0.886571894039094, 0.21737828721170555)],
        bartlett: (0.2540891363074762, 0.9684183865455972),
        anova: (2.8941836739535622, 0.052134805201327544),
        pairs: &[(1, 0, -0.1344902777777779, -0.26768863291485123, -0.0012919226407045736, 0.04715044807794522), (2, 0, -0.03332500000000005, -0.17038497669590502, 0.10373497669590492, 0.9102756734021138), (3, 0, -0.08305000000000018, -0.22010997669590515, 0.05400997669590479, 0.3672146082415333), (2, 1, 0.10116527777777784, -0.032033077359295475, 0.23436363291485116, 0.18704424786945362), (3, 1, 0.05144027777777771, -0.0817580773592956, 0.18463863291485103, 0.7205862676469064), (3, 2, -0.04972500000000013, -0.1867849766959051, 0.08733497669590484, 0.7570813458173196)],
    },
    Oracle {
        groups: &[&[8.9031, 10.1843, 6.958, 8.9916, 9.9921, 9.9289, 11.7511, 11.5685, 10.6657, 11.8269, 11.8795, 7.7817, 14.3705, 9.9021, 8.7881, 11.2003, 9.0228, 11.2543, 7.5972, 11.4507], &[7.7084, 12.6272, 10.8603, 9.9956, 11.9592, 9.7741, 9.1842, 12.6847, 17.2936, 8.5067, 14.9655, 14.7447, 8.1398, 12.0707, 13.0721, 8.7674, 14.7377, 14.1337, 16.5953, 12.6695, 14.3381, 16.9363, 12.109, 9.9993, 7.1473]],
        shapiro: &[(0.9658264792817055, 0.6654578679352248), (0.9620157172798688, 0.4560672127988156)],
        bartlett: (4.907099652272057, 0.026746516239790314),
        anova: (5.9378262902851455, 0.019033071457906885),
        pairs: &[(1, 0, 1.8399460000000012, 0.3171877836813246, 3.3627042163186776, 0.019033071457912665)],
    },
    Oracle {
        groups: &[&[0.2865, -1.2672, 1.0977, 0.1472, 0.8111], &[0.8254, 2.9767, -0.4127, 0.6001, 3.3002, -2.0166, 0.8851], &[2.4629, -0.5953, -0.0496, -0.8749, 2.7711, 0.7159], &[-0.0206, -0.7888, -0.5447, 0.8486, 0.0674, -0.0806, 0.7543, -0.4341, 1.3294, -0.0578], &[1.487, 1.7348, 2.0373, 2.7012]],
        shapiro: &[(0.897895638286681, 0.3983642679935943), (0.9406769442766328, 0.6448247935763092), (0.8832398013515322, 0.2842674463048449), (0.9338695642775667, 0.48701288092124334), (0.9475658401990963, 0.7009455639108263)],
        bartlett: (10.214034147794504, 0.036972583633902815),
        anova: (1.9039503796154016, 0.13867906464618934),
        pairs: &[(1, 0, 0.6646828571428571, -1.4359312261579569, 2.765296940443671, 0.8850383266561221), (2, 0, 0.52329, -1.6490379358279463, 2.695617935827946, 0.9539014424315415), (3, 0, -0.10774999999999998, -2.0726945503859655, 1.8571945503859655, 0.9998420697837797), (4, 0, 1.775015, -0.6315407606540628, 4.181570760654063, 0.2274277804584912), (2, 1, -0.1413928571428571, -2.1372833199734753, 1.854497605687761, 0.9995641025382596), (3, 1, -0.772432857142857, -2.5403630494669818, 0.9954973351812678, 0.7075852771777656), (4, 1, 1.110332142857143, -1.138240895311057, 3.358905181025343, 0.6069246510370272), (3, 2, -0.6310399999999999, -2.4836074883112906, 1.2215274883112905, 0.8553235761093001), (4, 2, 1.251725, -1.0639843603891128, 3.5674343603891128, 0.5230080036382718), (4, 3, 1.882765, -0.23961768630017666, 4.005147686300177, 0.10045897195521658)],
    },
    Oracle {
        groups: &[&[0.2949, 0.0677, 0.5142, 0.2744, 0.8091, 0.605, 0.8481, 0.9696, 0.582, 0.9099, 0.2626, 0.8909, 0.4625, 0.485, 0.1293, 0.1197, 0.3192, 0.7856, 0.018, 0.9303, 0.1024, 0.3114, 0.7049, 0.7101, 0.9418, 0.9228, 0.6994, 0.0284, 0.2078, 0.1452, 0.1089, 0.406, 0.0021, 0.3599, 0.1378, 0.697, 0.5568, 0.6684, 0.8484, 0.1091, 0.3262, 0.2262, 0.1788, 0.882, 0.5184, 0.1678, 0.4212, 0.8776, 0.1014, 0.0788], &[2.8106, 0.6001, 0.138, 1.1091, 1.5909, 0.1823, 2.5452, 0.2444, 0.6013, 0.1956, 0.8923, 0.2956], &[-0.7959, -0.1254, -1.5523, 0.6293, 0.447, 0.0188, -1.3456, -0.3889, 0.6822, -0.1843, 0.1201, 1.1452, 0.6335, -1.5987, 0.3666, -0.9359, -2.2249, 1.16, -1.4856, -0.3155, 1.249, 0.703, -0.062, -0.8879, 0.2961, -0.0683, 0.8214, 0.3882, 0.7291, -1.5036, -0.8591, 0.1597, 0.3689, -0.6243, -0.7018, -0.0271, 0.1249, 1.964, -0.3839, 0.5375, -1.7128, -0.1004, -0.3212, -1.2884, -0.9706, -0.6453, -0.7819, -1.8979, -0.3237, -0.0989]],
        shapiro: &[(0.915085565745778, 0.0015736534294732859), (0.8128580589210734, 0.01316759418049027), (0.9882888265934783, 0.8983107969461106)],
        bartlett: (48.59555214244277, 2.802915013012327e-11),
        anova: (19.065463737559146, 7.94104446516323e-08),
        pairs: &[(1, 0, 0.4792833333333334, -0.06116121636062344, 1.0197278830272902, 0.09305693232891776), (2, 0, -0.6878520000000001, -1.024100935027782, -0.3516030649722181, 1.1737862854799275e-05), (2, 1, -1.1671353333333336, -1.7075798830272904, -0.6266907836393768, 3.7604946522273863e-06)],
    },
];
