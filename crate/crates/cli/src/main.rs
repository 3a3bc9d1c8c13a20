fn main() {
    println!("tsbpx");
}
